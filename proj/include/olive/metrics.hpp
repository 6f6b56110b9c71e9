#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace olive {

/// Root-mean-square error. Throws DataError on empty or mismatched inputs.
double rmse(std::span<const double> estimates, std::span<const double> actuals);

enum class R2Mode {
  determination,  // 1 - SS_res / SS_tot
  pearson_sq,     // squared Pearson correlation
};

R2Mode parse_r2_mode(std::string_view text);
std::string_view to_string(R2Mode mode);

/// Needs >= 2 equal-length values. determination rejects constant actuals;
/// pearson_sq rejects either vector being constant.
double r_squared(std::span<const double> estimates, std::span<const double> actuals,
                 R2Mode mode = R2Mode::determination);

/// Seeded Fisher-Yates shuffle of 0..n-1 cut into k contiguous chunks; the
/// first n % k folds get one extra row. Requires 2 <= k <= n.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k,
                                                  std::uint64_t seed);

}  // namespace olive
