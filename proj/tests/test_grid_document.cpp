#include <gridcraft/grid_document.hpp>

#include <gtest/gtest.h>

using namespace gridcraft;
using ojson = nlohmann::ordered_json;

namespace {

GridDocument sample_doc() {
  SyntheticSpec s;
  s.meta_rows = 2;
  s.meta_cols = 2;
  s.spots_rows = 3;
  s.spots_cols = 4;
  const auto [img, truth] = generate(s);
  GridDocument doc;
  doc.image_path = "array.png";
  doc.width = img.width();
  doc.height = img.height();
  doc.method = MethodDescriptor::from(Method::sum_derivative());
  doc.grid = grid_array(img, Method::sum_derivative());
  doc.timing = PipelineTiming{1.5, 2.5};
  return doc;
}

ErrorCode parse_code(const ojson& j) {
  try {
    grid_document_from_json(j);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(GridDocument, FieldNames) {
  const ojson j = to_json(sample_doc());
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"schema_version", "image", "method", "subarray_cols", "subarray_rows",
                                            "spots", "timing"}));
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_TRUE(j["method"]["threshold"].is_null());
  EXPECT_EQ(j["method"]["name"], "sum-deriv");
  EXPECT_DOUBLE_EQ(j["timing"]["total_ms"].get<double>(), 4.0);
  EXPECT_EQ(j["spots"].size(), 2u);
  EXPECT_EQ(j["spots"][1].size(), 2u);
}

TEST(GridDocument, RoundTrip) {
  const GridDocument doc = sample_doc();
  const std::string text = serialize(doc);
  const GridDocument back = parse_grid_document(text);
  EXPECT_EQ(back, doc);
  EXPECT_EQ(serialize(back), text);
  EXPECT_EQ(serialize(back, false), serialize(doc, false));
}

TEST(GridDocument, ThresholdIsKept) {
  GridDocument doc = sample_doc();
  doc.method = MethodDescriptor::from(Method::sum_threshold(0.3));
  EXPECT_EQ(parse_grid_document(serialize(doc)).method.threshold, 0.3);
}

TEST(GridDocument, SchemaViolations) {
  const ojson good = to_json(sample_doc());
  auto bad = good;
  bad["schema_version"] = 2;
  EXPECT_EQ(parse_code(bad), ErrorCode::SchemaMismatch);
  bad = good;
  bad.erase("spots");
  EXPECT_EQ(parse_code(bad), ErrorCode::SchemaMismatch);
  bad = good;
  bad["subarray_cols"] = {0, 50, 40, good["image"]["width"]};
  EXPECT_EQ(parse_code(bad), ErrorCode::SchemaMismatch);
  bad = good;
  bad["subarray_rows"].back() = 3;
  EXPECT_EQ(parse_code(bad), ErrorCode::SchemaMismatch);
  bad = good;
  bad["spots"][0].erase(0);
  EXPECT_EQ(parse_code(bad), ErrorCode::SchemaMismatch);
  bad = good;
  bad["spots"][0][0]["cols"].back() = 1;
  EXPECT_EQ(parse_code(bad), ErrorCode::SchemaMismatch);
  bad = good;
  bad["image"]["width"] = "wide";
  EXPECT_EQ(parse_code(bad), ErrorCode::SchemaMismatch);
  bad = good;
  bad["subarray_cols"][1] = -4;
  EXPECT_EQ(parse_code(bad), ErrorCode::SchemaMismatch);
  EXPECT_THROW(parse_grid_document("{not json"), Error);
}

TEST(GridDocument, EmptySpotsMeansSubarraysOnly) {
  GridDocument doc = sample_doc();
  doc.grid.spots.clear();
  const GridDocument back = parse_grid_document(serialize(doc));
  EXPECT_FALSE(back.grid.has_spots());
}

TEST(TruthDocument, CarriesGroundTruth) {
  const auto [img, truth] = generate(fig3_like_spec());
  const GridDocument doc = truth_document(truth, "fig3.png");
  EXPECT_EQ(doc.method.name, "truth");
  EXPECT_EQ(doc.grid.spot_cell_count(), 6144u);
  EXPECT_EQ(parse_grid_document(serialize(doc, false)), doc);
}
