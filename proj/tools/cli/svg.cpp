#include "svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

namespace drlab {

namespace {

std::string num(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
    return std::string(buf, r.ptr);
}

const char* phase_colour(Phase ph) {
    switch (ph) {
        case Phase::Pinned: return "#4c72b0";
        case Phase::Critical: return "#c44e52";
        case Phase::Unpinned: return "#dd8452";
        case Phase::DegenerateBoundary: return "#555555";
    }
    return "#000000";
}

}  // namespace

std::string phase_svg(const std::vector<PhaseCell>& cells, double lam_lo, double lam_hi, double p_lo,
                      double p_hi) {
    const double W = 600, H = 400, m = 50;
    const double lspan = lam_hi > lam_lo ? lam_hi - lam_lo : 1.0;
    const double pspan = p_hi > p_lo ? p_hi - p_lo : 1.0;
    auto X = [&](double lam) { return m + (lam - lam_lo) / lspan * W; };
    auto Y = [&](double p) { return m + H - (p - p_lo) / pspan * H; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W + 2 * m) << "\" height=\""
       << num(H + 2 * m) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& c : cells)
        os << "<circle cx=\"" << num(X(c.lambda)) << "\" cy=\"" << num(Y(c.p)) << "\" r=\"2\" fill=\""
           << phase_colour(c.phase) << "\"/>\n";

    // critical curve, clipped to the plotted window
    os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    const int n = 400;
    for (int k = 0; k <= n; ++k) {
        const double lam = 1.0 + (std::numbers::e - 1.0) * k / n;
        const double p = lam - lam * std::log(lam);
        if (lam < lam_lo || lam > lam_hi || p < p_lo || p > p_hi) continue;
        os << num(X(lam)) << ',' << num(Y(p)) << ' ';
    }
    os << "\"/>\n";

    os << "<rect x=\"" << num(m) << "\" y=\"" << num(m) << "\" width=\"" << num(W) << "\" height=\"" << num(H)
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(m + W / 2) << "\" y=\"" << num(H + 1.7 * m)
       << "\" text-anchor=\"middle\" font-size=\"14\">lambda</text>\n";
    os << "<text x=\"" << num(m / 3) << "\" y=\"" << num(m + H / 2) << "\" font-size=\"14\">p</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double lam = lam_lo + lspan * k / 4, p = p_lo + pspan * k / 4;
        os << "<text x=\"" << num(X(lam)) << "\" y=\"" << num(H + 1.3 * m) << "\" text-anchor=\"middle\" font-size=\"11\">"
           << num(lam) << "</text>\n";
        os << "<text x=\"" << num(m - 5) << "\" y=\"" << num(Y(p) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
           << num(p) << "</text>\n";
    }
    const char* names[] = {"Pinned", "Critical", "Unpinned"};
    const Phase phases[] = {Phase::Pinned, Phase::Critical, Phase::Unpinned};
    for (int k = 0; k < 3; ++k)
        os << "<text x=\"" << num(m + W + 5) << "\" y=\"" << num(m + 15 + 15 * k) << "\" font-size=\"11\" fill=\""
           << phase_colour(phases[k]) << "\">" << names[k] << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string red_tree_svg(const RedTree& tree) {
    const std::size_t n = tree.nodes.size();
    // leaf order by depth-first traversal, children in stored order
    std::vector<double> xpos(n, 0.0);
    std::size_t leaves = 0;
    for (const auto& nd : tree.nodes) leaves += nd.leaf();
    std::vector<std::pair<std::size_t, bool>> stack{{0, false}};
    double next_leaf = 0.0;
    while (!stack.empty()) {
        auto [i, expanded] = stack.back();
        stack.pop_back();
        const auto& nd = tree.nodes[i];
        if (nd.leaf()) {
            xpos[i] = next_leaf++;
        } else if (!expanded) {
            stack.push_back({i, true});
            stack.push_back({static_cast<std::size_t>(nd.child[1]), false});
            stack.push_back({static_cast<std::size_t>(nd.child[0]), false});
        } else {
            xpos[i] = 0.5 * (xpos[static_cast<std::size_t>(nd.child[0])] + xpos[static_cast<std::size_t>(nd.child[1])]);
        }
    }

    const double W = std::clamp(4.0 * static_cast<double>(leaves), 400.0, 2400.0), H = 800, m = 20;
    const double height = tree.height > 0 ? tree.height : 1.0;
    auto X = [&](double v) { return m + (leaves > 1 ? v / static_cast<double>(leaves - 1) * W : W / 2); };
    auto Y = [&](double s) { return m + s / height * H; };
    const double sw = leaves > 500 ? 0.5 : 1.0;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W + 2 * m) << "\" height=\""
       << num(H + 2 * m) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<g stroke=\"#b2182b\" stroke-width=\"" << num(sw) << "\" fill=\"none\">\n";
    for (std::size_t i = 0; i < n; ++i) {
        const auto& nd = tree.nodes[i];
        os << "<line x1=\"" << num(X(xpos[i])) << "\" y1=\"" << num(Y(nd.birth)) << "\" x2=\"" << num(X(xpos[i]))
           << "\" y2=\"" << num(Y(nd.death)) << "\"/>\n";
        if (!nd.leaf()) {
            const auto a = static_cast<std::size_t>(nd.child[0]), b = static_cast<std::size_t>(nd.child[1]);
            os << "<line x1=\"" << num(X(xpos[a])) << "\" y1=\"" << num(Y(nd.death)) << "\" x2=\"" << num(X(xpos[b]))
               << "\" y2=\"" << num(Y(nd.death)) << "\"/>\n";
        }
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

}  // namespace drlab
