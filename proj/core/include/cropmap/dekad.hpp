#pragma once

#include <chrono>

namespace cropmap {

inline constexpr int kDekadsPerYear = 36;

/// Month-anchored dekads: days 1-10, 11-20 and 21-end of each month.
/// January 1-10 is dekad 0, December 21-31 is dekad 35.
constexpr int dekad_of(std::chrono::year_month_day date) {
  const int month = static_cast<int>(static_cast<unsigned>(date.month()));
  const int day = static_cast<int>(static_cast<unsigned>(date.day()));
  const int third = day <= 10 ? 0 : (day <= 20 ? 1 : 2);
  return (month - 1) * 3 + third;
}

/// Last dekad index of a month (1-12): the hindcast window for month m is
/// dekads [0, last_dekad_of_month(m)].
constexpr int last_dekad_of_month(int month) { return month * 3 - 1; }

/// Month (1-12) a dekad belongs to.
constexpr int month_of_dekad(int dekad) { return dekad / 3 + 1; }

}  // namespace cropmap
