#pragma once

#include <array>
#include <span>
#include <string>
#include <stdexcept>

#include "subcast/common.hpp"

namespace subcast::models {

inline constexpr int kNaiveWindow = 12;

// Mean of the 12 most recent prices, the same for every horizon.
inline double naive12_predict(std::span<const double> lags) {
  if (lags.size() < static_cast<std::size_t>(kNaiveWindow))
    throw InputError("naive12: needs 12 price lags, got " + std::to_string(lags.size()));
  return mean_of(lags.first(kNaiveWindow));
}

// Forecast made at decision week t from prices P_{t-1} .. P_{t-12}.
inline double naive12_at(std::span<const double> price, int t) {
  if (t < kNaiveWindow || t > static_cast<int>(price.size()))
    throw InputError("naive12: decision week " + std::to_string(t) + " lacks 12 past prices");
  std::array<double, kNaiveWindow> lags{};
  for (int i = 0; i < kNaiveWindow; ++i) lags[static_cast<std::size_t>(i)] = price[static_cast<std::size_t>(t - 1 - i)];
  return naive12_predict(lags);
}

}  // namespace subcast::models
