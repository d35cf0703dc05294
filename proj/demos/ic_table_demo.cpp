// Runs a reduced incentive-compatibility experiment and prints the text tables.
// Usage: ic_table_demo [iterations] [master_seed]
#include <cstdlib>
#include <iostream>

#include "iclasso/iclasso.hpp"

int main(int argc, char** argv) {
    using namespace iclasso;
    ExperimentConfig cfg;
    cfg.iterations = argc > 1 ? std::atoi(argv[1]) : 20;
    cfg.master_seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1;
    const ExperimentResult res = run_experiment(cfg);
    for (const auto& f : res.failures) std::cerr << f << '\n';
    if (!res.cells.empty()) emit_table(std::cout, res.cells, TableFormat::text);
    return res.ok() ? 0 : 1;
}
