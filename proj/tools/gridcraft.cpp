// gridcraft command-line front end.
//
//   gridcraft grid    --input IMG --method M [--threshold F] [--smooth W] --out grid.json ...
//   gridcraft profile --input IMG --kind sum|stddev --axis cols|rows [--derivative N] --out CSV
//   gridcraft synth   --spec FILE | --preset fig3  --out-image IMG --out-truth JSON [--seed N]
//   gridcraft eval    --found grid.json --truth truth.json --tol PX [--report R] [--input IMG]
//
// Exit codes: 0 success, 1 processing error, 2 usage error.

#include <gridcraft/grid_document.hpp>
#include <gridcraft/gridcraft.hpp>
#include <gridcraft/image_io.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

namespace fs = std::filesystem;
using namespace gridcraft;

namespace {

constexpr int kOk = 0;
constexpr int kProcessing = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void report_error(const Error& e) {
  nlohmann::ordered_json j;
  j["error"] = std::string(to_string(e.code()));
  j["message"] = e.what();
  std::cerr << j.dump() << "\n";
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + p.string());
}

std::size_t default_jobs() {
  if (const char* env = std::getenv("GRIDCRAFT_JOBS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------- grid

struct GridArgs {
  std::string input, method, out, cells, crop_dir, templ, scope = "spots";
  std::optional<double> threshold;
  std::size_t smooth = 1;
  std::size_t jobs = 0;
  bool invert = false;
};

void write_cells_csv(const fs::path& path, const IntensityImage& img, const std::vector<SpotCell>& cells) {
  std::ostringstream os;
  os << "subarray_row,subarray_col,cell_row,cell_col,x0,y0,x1,y1,spot_count\n";
  for (const auto& c : cells) {
    os << c.subarray.row << ',' << c.subarray.col << ',' << c.cell.row << ',' << c.cell.col << ',' << c.bounds.x0
       << ',' << c.bounds.y0 << ',' << c.bounds.x1 << ',' << c.bounds.y1 << ',' << count_spots(crop(img, c.bounds))
       << '\n';
  }
  write_text(path, os.str());
}

void write_crops(const fs::path& dir, const IntensityImage& img, const std::vector<SpotCell>& cells) {
  for (const auto& c : cells) {
    const fs::path sub = dir / ("sub" + std::to_string(c.subarray.row) + "_" + std::to_string(c.subarray.col));
    fs::create_directories(sub);
    save_png(sub / ("spot" + std::to_string(c.cell.row) + "_" + std::to_string(c.cell.col) + ".png"),
             crop(img, c.bounds), 16);
  }
}

int cmd_grid(const GridArgs& a) {
  // Usage checks come first so a bad flag combination never touches the input.
  const auto kind = parse_method_kind(a.method);
  if (!kind) throw UsageError("unknown method " + a.method);
  if (is_derivative(*kind) && a.threshold) {
    throw UsageError("--threshold is not accepted by " + a.method + ": derivative methods need no threshold");
  }
  if (is_threshold(*kind) && !a.threshold) throw UsageError(a.method + " requires --threshold");
  if (*kind == MethodKind::TemplateMatch && a.templ.empty()) throw UsageError("template requires --template");
  if (*kind != MethodKind::TemplateMatch && !a.templ.empty()) throw UsageError("--template applies to template only");
  if (a.scope != "spots" && a.scope != "subarrays") throw UsageError("--scope must be spots or subarrays");
  Method method = Method::template_match();
  PipelineOptions opt;
  try {
    method = Method::create(*kind, a.threshold, SmoothWindow{a.smooth});
    if (*kind == MethodKind::TemplateMatch) opt.lattice = parse_template(a.templ);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  opt.jobs = a.jobs ? a.jobs : default_jobs();
  opt.subarrays_only = a.scope == "subarrays";

  IntensityImage img = load_image(a.input);
  if (a.invert) img = invert(img);
  GridDocument doc;
  doc.image_path = a.input;
  doc.width = img.width();
  doc.height = img.height();
  doc.method = MethodDescriptor::from(method);
  PipelineTiming timing;
  doc.grid = grid_array(img, method, opt, &timing);
  doc.timing = timing;
  write_text(a.out, serialize(doc));

  if ((!a.cells.empty() || !a.crop_dir.empty()) && doc.grid.has_spots()) {
    const auto cells = extract_all_cells(img, doc.grid);
    if (!a.cells.empty()) write_cells_csv(a.cells, img, cells);
    if (!a.crop_dir.empty()) write_crops(a.crop_dir, img, cells);
  }
  return kOk;
}

// ------------------------------------------------------------- profile

struct ProfileArgs {
  std::string input, kind, axis, out;
  std::size_t derivative = 0;
};

int cmd_profile(const ProfileArgs& a) {
  const Axis axis = a.axis == "cols" ? Axis::Columns : Axis::Rows;
  const IntensityImage img = load_image(a.input);
  Profile1D p = a.kind == "sum" ? sum_profile(img, axis) : stddev_profile(img, axis);
  for (std::size_t i = 0; i < a.derivative; ++i) p = derivative(p);
  std::ostringstream os;
  write_profile_csv(os, p);
  write_text(a.out, os.str());
  return kOk;
}

// --------------------------------------------------------------- synth

struct SynthArgs {
  std::string spec, preset, out_image, out_truth, out_centers;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a) {
  if (a.spec.empty() == a.preset.empty()) throw UsageError("give exactly one of --spec and --preset");
  SyntheticSpec spec;
  try {
    if (!a.preset.empty()) {
      if (a.preset != "fig3") throw UsageError("unknown preset " + a.preset);
      spec = fig3_like_spec();
    } else {
      std::ifstream in(a.spec);
      if (!in) throw UsageError("cannot open spec file " + a.spec);
      spec = parse_spec(in);
    }
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (a.seed) spec.seed = *a.seed;
  for (const auto& w : spec.warnings()) std::cerr << "warning: " << w << "\n";

  const auto [img, truth] = generate(spec);
  const fs::path out(a.out_image);
  const std::string ext = out.extension().string();
  if (ext == ".tif" || ext == ".tiff") save_tiff(out, img, 16);
  else save_png(out, img, 16);
  write_text(a.out_truth, serialize(truth_document(truth, a.out_image), false));
  fs::path centers = a.out_centers.empty() ? fs::path(a.out_truth).replace_extension(".centers.csv") : fs::path(a.out_centers);
  std::ostringstream os;
  write_spot_centers_csv(os, truth.spot_centers);
  write_text(centers, os.str());
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string found, truth, report, input;
  double tol = 2.0;
};

nlohmann::ordered_json score_json(const GridScore& s) {
  return {{"matched", s.matched_cuts},
          {"missed", s.missed_cuts},
          {"spurious", s.spurious_cuts},
          {"mean_abs_offset", s.mean_abs_offset},
          {"max_abs_offset", s.max_abs_offset}};
}

int cmd_eval(const EvalArgs& a) {
  if (!(a.tol >= 0.0)) throw UsageError("--tol must be non-negative");
  GridDocument found, truth;
  try {
    found = parse_grid_document(read_text(a.found));
    truth = parse_grid_document(read_text(a.truth));
    if (found.width != truth.width || found.height != truth.height) {
      throw Error(ErrorCode::SchemaMismatch, "found and truth describe different image sizes");
    }
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const ArrayScore s = score_array(found.grid, truth.grid, a.tol);
  nlohmann::ordered_json j;
  j["tol"] = a.tol;
  j["subarray"] = {{"cols", score_json(s.subarray_cols)}, {"rows", score_json(s.subarray_rows)}};
  j["spot"] = {{"cols", score_json(s.spot_cols)}, {"rows", score_json(s.spot_rows)}};
  if (!a.input.empty() && found.grid.has_spots()) {
    const IntensityImage img = load_image(a.input);
    std::map<std::size_t, std::size_t> hist;
    for (const auto& c : extract_all_cells(img, found.grid)) ++hist[count_spots(crop(img, c.bounds))];
    nlohmann::ordered_json h = nlohmann::ordered_json::object();
    for (const auto& [k, n] : hist) h[std::to_string(k)] = n;
    j["spots_per_cell"] = h;
  }
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!a.report.empty()) write_text(a.report, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microarray image gridding"};
  app.require_subcommand(1);

  GridArgs g;
  auto* grid = app.add_subcommand("grid", "Grid an array image into subarrays and spot cells");
  grid->add_option("--input", g.input, "PNG or TIFF image")->required();
  grid->add_option("--method", g.method, "template|sum|stddev|sum-deriv|stddev-deriv")->required();
  grid->add_option("--threshold", g.threshold, "Range fraction for sum/stddev");
  grid->add_option("--smooth", g.smooth, "Odd moving-average window for derivative methods");
  grid->add_option("--template", g.templ, "Lattice, e.g. rows=24,cols=16,pitch=12,radius=5,margin=6");
  grid->add_option("--out", g.out, "GridDocument JSON output")->required();
  grid->add_option("--cells", g.cells, "Cell table CSV output");
  grid->add_option("--crop-dir", g.crop_dir, "Directory for per-cell PNG crops");
  grid->add_option("--scope", g.scope, "spots (default) or subarrays");
  grid->add_option("--jobs", g.jobs, "Worker threads (default: GRIDCRAFT_JOBS or CPU count)");
  grid->add_flag("--invert", g.invert, "Dark spots on a bright background");

  ProfileArgs p;
  auto* profile = app.add_subcommand("profile", "Write a projection profile as CSV");
  profile->add_option("--input", p.input)->required();
  profile->add_option("--kind", p.kind)->required()->check(CLI::IsMember({"sum", "stddev"}));
  profile->add_option("--axis", p.axis)->required()->check(CLI::IsMember({"cols", "rows"}));
  profile->add_option("--derivative", p.derivative, "Number of differentiations");
  profile->add_option("--out", p.out)->required();

  SynthArgs s;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic array image with ground truth");
  synth->add_option("--spec", s.spec, "key = value spec file");
  synth->add_option("--preset", s.preset, "fig3");
  synth->add_option("--out-image", s.out_image)->required();
  synth->add_option("--out-truth", s.out_truth)->required();
  synth->add_option("--out-centers", s.out_centers, "Spot centre CSV (default: next to the truth file)");
  synth->add_option("--seed", s.seed);

  EvalArgs e;
  auto* eval = app.add_subcommand("eval", "Score a grid against ground truth");
  eval->add_option("--found", e.found)->required();
  eval->add_option("--truth", e.truth)->required();
  eval->add_option("--tol", e.tol)->required();
  eval->add_option("--report", e.report);
  eval->add_option("--input", e.input, "Image for the spots-per-cell histogram");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (grid->parsed()) return cmd_grid(g);
    if (profile->parsed()) return cmd_profile(p);
    if (synth->parsed()) return cmd_synth(s);
    if (eval->parsed()) return cmd_eval(e);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kUsage;
  } catch (const Error& err) {
    report_error(err);
    return kProcessing;
  } catch (const std::exception& err) {
    report_error(Error(ErrorCode::IoFailure, err.what()));
    return kProcessing;
  }
  return kUsage;
}
