#pragma once

#include <string>
#include <vector>

#include "drlab/dynamics.hpp"
#include "drlab/redtree.hpp"

namespace drlab {

struct PhaseCell {
    double lambda, p;
    Phase phase;
};

/// Grid cells coloured by phase plus the critical curve p = lam - lam log lam.
/// Output contains no timestamps or other run-dependent text.
std::string phase_svg(const std::vector<PhaseCell>& cells, double lam_lo, double lam_hi, double p_lo,
                      double p_hi);

/// Tree time runs downwards; leaves are evenly spaced and every internal
/// node sits midway between its children.
std::string red_tree_svg(const RedTree& tree);

}  // namespace drlab
