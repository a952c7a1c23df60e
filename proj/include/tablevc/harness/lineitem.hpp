#pragma once

#include <cstdint>
#include <vector>

#include "tablevc/value.hpp"

namespace tablevc::harness {

// l_orderkey, l_linenumber, l_partkey, l_quantity, l_extendedprice,
// l_discount, l_shipmode, l_comment. The key is (l_orderkey, l_linenumber).
Schema lineitem_schema(bool primary_key);

// Rows in key order; 1..7 lines per order. Same seed, same rows.
std::vector<Row> gen_lineitem(std::size_t rows, std::uint64_t seed);

}  // namespace tablevc::harness
