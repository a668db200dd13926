#pragma once

// GridDocument: the JSON exchange format for two-level grids (schema v1).
//
//   {
//     "schema_version": 1,
//     "image":  {"path": "...", "width": W, "height": H},
//     "method": {"name": "sum-deriv", "threshold": null, "smooth": 1},
//     "subarray_cols": [0, ..., W],
//     "subarray_rows": [0, ..., H],
//     "spots": [[{"cols": [...], "rows": [...]}, ...], ...],   // [row][col]
//     "timing": {"subarrays_ms": ..., "spots_ms": ..., "total_ms": ...}
//   }
//
// Spot cut lists are local to their subarray. Ground truth uses the same
// schema with method name "truth".

#include <gridcraft/core.hpp>
#include <gridcraft/gridding.hpp>
#include <gridcraft/pipeline.hpp>

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace gridcraft {

inline constexpr int kGridSchemaVersion = 1;

struct MethodDescriptor {
  std::string name;
  std::optional<double> threshold;
  std::size_t smooth = 1;

  static MethodDescriptor from(const Method& m) {
    return MethodDescriptor{std::string(to_string(m.kind())), m.threshold_fraction(), m.smooth_window()};
  }

  friend bool operator==(const MethodDescriptor&, const MethodDescriptor&) = default;
};

struct GridDocument {
  int schema_version = kGridSchemaVersion;
  std::string image_path;
  std::size_t width = 0;
  std::size_t height = 0;
  MethodDescriptor method;
  ArrayGrid grid;
  std::optional<PipelineTiming> timing;

  friend bool operator==(const GridDocument& a, const GridDocument& b) {
    return a.schema_version == b.schema_version && a.image_path == b.image_path && a.width == b.width &&
           a.height == b.height && a.method == b.method && a.grid == b.grid;
  }
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline GridLines lines_from_json(const ojson& j, Axis axis, std::size_t extent, const char* what) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaMismatch, std::string(what) + " must be an array");
  std::vector<std::size_t> cuts;
  for (const auto& v : j) {
    if (!v.is_number_unsigned()) throw Error(ErrorCode::SchemaMismatch, std::string(what) + " holds a non-integer cut");
    cuts.push_back(v.get<std::size_t>());
  }
  try {
    GridLines g(axis, std::move(cuts));
    if (g.extent() != extent) throw Error(ErrorCode::SchemaMismatch, std::string(what) + " does not end at the extent");
    return g;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaMismatch) throw;
    throw Error(ErrorCode::SchemaMismatch, std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const GridDocument& doc, bool with_timing = true) {
  detail::ojson j;
  j["schema_version"] = doc.schema_version;
  j["image"] = {{"path", doc.image_path}, {"width", doc.width}, {"height", doc.height}};
  detail::ojson m;
  m["name"] = doc.method.name;
  m["threshold"] = doc.method.threshold ? detail::ojson(*doc.method.threshold) : detail::ojson(nullptr);
  m["smooth"] = doc.method.smooth;
  j["method"] = m;
  j["subarray_cols"] = doc.grid.subarrays.col_lines.cuts;
  j["subarray_rows"] = doc.grid.subarrays.row_lines.cuts;
  detail::ojson spots = detail::ojson::array();
  for (const auto& row : doc.grid.spots) {
    detail::ojson jr = detail::ojson::array();
    for (const auto& g : row) jr.push_back({{"cols", g.col_lines.cuts}, {"rows", g.row_lines.cuts}});
    spots.push_back(jr);
  }
  j["spots"] = spots;
  if (with_timing && doc.timing) {
    j["timing"] = {{"subarrays_ms", doc.timing->subarrays_ms},
                   {"spots_ms", doc.timing->spots_ms},
                   {"total_ms", doc.timing->subarrays_ms + doc.timing->spots_ms}};
  }
  return j;
}

/// Parses and validates a v1 document; any violation raises SchemaMismatch.
inline GridDocument grid_document_from_json(const nlohmann::ordered_json& j) {
  auto require = [&](const char* key) -> const detail::ojson& {
    if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::SchemaMismatch, std::string("missing field ") + key);
    return j.at(key);
  };
  GridDocument doc;
  const auto& ver = require("schema_version");
  if (!ver.is_number_integer() || ver.get<int>() != kGridSchemaVersion) {
    throw Error(ErrorCode::SchemaMismatch, "unsupported schema_version");
  }
  try {
    const auto& img = require("image");
    doc.image_path = img.at("path").get<std::string>();
    doc.width = img.at("width").get<std::size_t>();
    doc.height = img.at("height").get<std::size_t>();
    const auto& m = require("method");
    doc.method.name = m.at("name").get<std::string>();
    if (m.contains("threshold") && !m.at("threshold").is_null()) doc.method.threshold = m.at("threshold").get<double>();
    if (m.contains("smooth")) doc.method.smooth = m.at("smooth").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, e.what());
  }
  if (doc.width == 0 || doc.height == 0) throw Error(ErrorCode::SchemaMismatch, "image dimensions must be positive");

  doc.grid.subarrays = CellGrid(detail::lines_from_json(require("subarray_cols"), Axis::Columns, doc.width, "subarray_cols"),
                                detail::lines_from_json(require("subarray_rows"), Axis::Rows, doc.height, "subarray_rows"));
  const auto& spots = require("spots");
  if (!spots.is_array()) throw Error(ErrorCode::SchemaMismatch, "spots must be an array");
  if (!spots.empty()) {
    if (spots.size() != doc.grid.subarrays.rows()) {
      throw Error(ErrorCode::SchemaMismatch, "spots has the wrong number of subarray rows");
    }
    for (std::size_t R = 0; R < spots.size(); ++R) {
      const auto& row = spots[R];
      if (!row.is_array() || row.size() != doc.grid.subarrays.cols()) {
        throw Error(ErrorCode::SchemaMismatch, "spots has the wrong number of subarray columns");
      }
      std::vector<CellGrid> grids;
      for (std::size_t C = 0; C < row.size(); ++C) {
        const Rect sub = doc.grid.subarrays.cell(R, C);
        if (!row[C].is_object() || !row[C].contains("cols") || !row[C].contains("rows")) {
          throw Error(ErrorCode::SchemaMismatch, "spot grid entries need cols and rows");
        }
        grids.emplace_back(detail::lines_from_json(row[C]["cols"], Axis::Columns, sub.width(), "spots.cols"),
                           detail::lines_from_json(row[C]["rows"], Axis::Rows, sub.height(), "spots.rows"));
      }
      doc.grid.spots.push_back(std::move(grids));
    }
  }
  if (j.contains("timing") && j["timing"].is_object()) {
    PipelineTiming t;
    t.subarrays_ms = j["timing"].value("subarrays_ms", 0.0);
    t.spots_ms = j["timing"].value("spots_ms", 0.0);
    doc.timing = t;
  }
  return doc;
}

inline GridDocument parse_grid_document(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("not valid JSON: ") + e.what());
  }
  return grid_document_from_json(j);
}

inline std::string serialize(const GridDocument& doc, bool with_timing = true) {
  return to_json(doc, with_timing).dump(2) + "\n";
}

inline GridDocument truth_document(const GroundTruth& truth, std::string image_path = {}) {
  GridDocument doc;
  doc.image_path = std::move(image_path);
  doc.width = truth.subarray_cols.extent();
  doc.height = truth.subarray_rows.extent();
  doc.method.name = "truth";
  doc.grid = to_array_grid(truth);
  return doc;
}

}  // namespace gridcraft
