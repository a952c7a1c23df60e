#include "tablevc/harness/lineitem.hpp"

#include <array>
#include <random>
#include <string>

namespace tablevc::harness {

Schema lineitem_schema(bool primary_key) {
  Schema s;
  s.columns = {{"l_orderkey", ColumnType::Int64},    {"l_linenumber", ColumnType::Int64},
               {"l_partkey", ColumnType::Int64},     {"l_quantity", ColumnType::Int64},
               {"l_extendedprice", ColumnType::Float64}, {"l_discount", ColumnType::Float64},
               {"l_shipmode", ColumnType::String},   {"l_comment", ColumnType::String}};
  if (primary_key) s.primary_key = {"l_orderkey", "l_linenumber"};
  return s;
}

std::vector<Row> gen_lineitem(std::size_t rows, std::uint64_t seed) {
  static constexpr std::array<const char*, 7> kModes = {"AIR", "FOB", "MAIL", "RAIL", "REG AIR", "SHIP", "TRUCK"};
  static constexpr std::array<const char*, 8> kWords = {"carefully", "final", "deposits", "quickly",
                                                        "ironic", "packages", "sleep", "furiously"};
  std::mt19937_64 rng(seed);
  auto pick = [&](std::uint64_t n) { return rng() % n; };

  std::vector<Row> out;
  out.reserve(rows);
  std::int64_t order = 0;
  while (out.size() < rows) {
    order += 1 + static_cast<std::int64_t>(pick(3));
    auto lines = 1 + pick(7);
    for (std::uint64_t line = 1; line <= lines && out.size() < rows; ++line) {
      auto quantity = static_cast<std::int64_t>(1 + pick(50));
      auto partkey = static_cast<std::int64_t>(1 + pick(200000));
      double price = static_cast<double>(quantity) * (900.0 + static_cast<double>(partkey % 1000)) / 10.0;
      double discount = static_cast<double>(pick(11)) / 100.0;
      std::string comment = kWords[pick(kWords.size())];
      comment += ' ';
      comment += std::to_string(pick(100));
      out.push_back({order, static_cast<std::int64_t>(line), partkey, quantity, price, discount,
                     std::string(kModes[pick(kModes.size())]), std::move(comment)});
    }
  }
  return out;
}

}  // namespace tablevc::harness
