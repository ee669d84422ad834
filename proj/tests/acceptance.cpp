#include <cstdio>
#include <cstdlib>
#include <string>

#include "validation.hpp"

// Usage: acceptance [--fast] [--suite NAME] [--seed N]
int main(int argc, char** argv) {
    drlab::ValidationOptions opt;
    std::string suite = "all";
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--fast") {
            opt.fast = true;
        } else if (a == "--suite" && i + 1 < argc) {
            suite = argv[++i];
        } else if (a == "--seed" && i + 1 < argc) {
            opt.seed = std::strtoull(argv[++i], nullptr, 10);
        } else {
            std::fprintf(stderr, "usage: acceptance [--fast] [--suite NAME] [--seed N]\n");
            return 2;
        }
    }
    opt.on_result = [](const drlab::CriterionResult& r) {
        std::printf("%s %2d %s: %s [%.1f s]\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.detail.c_str(),
                    r.seconds);
        std::fflush(stdout);
    };
    int failed = 0;
    for (const auto& r : drlab::run_suite(suite, opt)) failed += !r.pass;
    std::printf("%d criteria failed\n", failed);
    return failed ? 1 : 0;
}
