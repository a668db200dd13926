// Generates a small noisy array, grids it with the derivative-of-sum method
// and prints how well the cuts agree with the generator's ground truth.

#include <gridcraft/gridcraft.hpp>

#include <cstdio>

int main() {
  gridcraft::SyntheticSpec spec;
  spec.meta_rows = 2;
  spec.meta_cols = 3;
  spec.spots_rows = 8;
  spec.spots_cols = 6;
  spec.noise_sigma = 300.0;
  spec.dropout_rate = 0.05;
  spec.seed = 7;

  const auto [image, truth] = gridcraft::generate(spec);
  const auto found = gridcraft::grid_array(image, gridcraft::Method::sum_derivative());
  const auto score = gridcraft::score_array(found, gridcraft::to_array_grid(truth), 2.0);

  std::printf("image %zux%zu: %zu subarrays, %zu spot cells (truth %zu)\n", image.width(), image.height(),
              found.subarrays.cell_count(), found.spot_cell_count(), truth.spot_cell_count());
  const auto spots = score.spots();
  std::printf("spot cuts: %zu matched, %zu missed, %zu spurious, mean offset %.2f px\n", spots.matched_cuts,
              spots.missed_cuts, spots.spurious_cuts, spots.mean_abs_offset);
  return 0;
}
