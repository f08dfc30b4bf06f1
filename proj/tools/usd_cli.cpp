// Command-line frontend: solve | posterior | simulate | surface.
//
// Exit codes: 0 success, 1 malformed input, 2 linearly dependent states,
// 3 unsupported dimension.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "usd/usd.hpp"

namespace {

struct CommonOptions {
    std::string input;
    bool normalize = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("input", opts.input, "problem file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_flag("--normalize", opts.normalize,
                  "rescale input states to unit norm instead of rejecting them");
}

void print_json(const usd::Json& doc) { std::cout << doc.dump(2) << "\n"; }

int run(int argc, char** argv) {
    CLI::App app{"Optimal unambiguous discrimination of linearly independent "
                 "quantum signal states"};
    app.require_subcommand(1);

    CommonOptions solveOpts;
    int oracleResolution = 0;
    double psdTolerance = usd::kPsdTolerance;
    auto* solve = app.add_subcommand(
        "solve", "maximize the expected gain and print the optimal measurement");
    add_common(solve, solveOpts);
    solve->add_option("--oracle", oracleResolution,
                      "also run the grid-search oracle at this resolution and "
                      "report the gain gap");
    solve->add_option("--tolerance", psdTolerance,
                      "positivity tolerance on the smallest eigenvalue of A_0");

    CommonOptions postOpts;
    bool mergedOnly = false;
    double cutoff = usd::kSpectralCutoff;
    auto* posterior = app.add_subcommand(
        "posterior", "posterior probabilities and entropies of the "
                     "inconclusive outcomes at the optimum");
    add_common(posterior, postOpts);
    posterior->add_flag("--merged", mergedOnly,
                        "report only the single merged inconclusive outcome");
    posterior->add_option("--cutoff", cutoff,
                          "relative eigenvalue cutoff for spectral outcomes");

    CommonOptions simOpts;
    std::uint64_t trials = 100000;
    std::uint64_t seed = 0;
    bool split = false;
    auto* simulate = app.add_subcommand(
        "simulate", "Monte Carlo run of the optimal measurement");
    add_common(simulate, simOpts);
    simulate->add_option("--trials", trials, "number of trials")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", seed, "random seed");
    simulate->add_flag("--split", split,
                       "split the inconclusive outcome into its spectral pieces");

    CommonOptions surfOpts;
    int resolution = 100;
    auto* surface = app.add_subcommand(
        "surface", "CSV sample of the det(A_0) = 0 surface (three states only)");
    add_common(surface, surfOpts);
    surface->add_option("--resolution", resolution, "grid points per axis")
        ->check(CLI::Range(2, 100000));

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) {
        const usd::StateEnsemble ensemble =
            usd::load_problem(solveOpts.input, solveOpts.normalize);
        const usd::DualSystem duals = usd::dual_vectors(ensemble);
        const usd::Solution solution = usd::optimize(ensemble);
        const usd::Feasibility feas = usd::is_feasible(
            usd::build_povm(duals, solution.k), psdTolerance);
        if (!feas.feasible) {
            throw usd::InternalConsistencyError(
                "solution violates the requested positivity tolerance");
        }
        std::optional<double> oracleGain;
        std::optional<double> oracleBound;
        if (oracleResolution > 0) {
            oracleGain = usd::grid_oracle(ensemble, oracleResolution).gain;
            oracleBound = usd::oracle_resolution_bound(ensemble, oracleResolution);
        }
        print_json(usd::solution_to_json(solution, duals, oracleGain, oracleBound));
    } else if (posterior->parsed()) {
        const usd::StateEnsemble ensemble =
            usd::load_problem(postOpts.input, postOpts.normalize);
        const usd::DualSystem duals = usd::dual_vectors(ensemble);
        const usd::Solution solution = usd::optimize(ensemble);
        const usd::PovmSet povm = usd::build_povm(duals, solution.k);
        print_json(usd::posterior_to_json(
            usd::posterior_report(ensemble, povm, cutoff), mergedOnly));
    } else if (simulate->parsed()) {
        const usd::StateEnsemble ensemble =
            usd::load_problem(simOpts.input, simOpts.normalize);
        const usd::DualSystem duals = usd::dual_vectors(ensemble);
        const usd::Solution solution = usd::optimize(ensemble);
        const usd::PovmSet povm = usd::build_povm(duals, solution.k);
        usd::SimulationConfig config{trials, seed, split};
        print_json(usd::simulation_to_json(
            usd::run_simulation(ensemble, povm, config)));
    } else if (surface->parsed()) {
        const usd::StateEnsemble ensemble =
            usd::load_problem(surfOpts.input, surfOpts.normalize);
        if (ensemble.size() != 3) {
            throw usd::DimensionError("surface sampling requires exactly 3 states");
        }
        const usd::DualSystem duals = usd::dual_vectors(ensemble);
        const usd::SurfaceSample sample = usd::surface_sample(duals, resolution);
        std::printf("k1,k2,k3\n");
        for (const auto& p : sample.points) {
            std::printf("%.15g,%.15g,%.15g\n", p[0], p[1], p[2]);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const usd::LinearDependenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const usd::DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
