#pragma once

#include <cstdint>
#include <span>

#include "gann/search.hpp"

namespace gann::detail {

/// bfis_search that also bumps counts[v] for every vertex whose distance it
/// computes.
SearchResult bfis_search_counting(const GraphIndex& g, std::span<const float> query, const SearchParams& p,
                                  std::span<std::uint64_t> counts);

}  // namespace gann::detail
