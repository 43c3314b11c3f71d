#include <CLI11.hpp>

#include <Eigen/Core>

#include <iostream>
#include <string>

#include "kfp/acceptance.hpp"
#include "kfp/errors.hpp"
#include "kfp/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"spectral laboratory for a kinetic Fokker-Planck operator"};
    app.require_subcommand(1);
    app.fallthrough();

    int threads = 1;
    app.add_option("--threads", threads, "worker threads for dense kernels")
        ->check(CLI::Range(1, 4096));

    struct Cmd {
        CLI::App* sub = nullptr;
        std::string config;
        std::string out = ".";
    };
    auto add_experiment = [&](const char* name, const char* blurb) {
        Cmd cmd;
        cmd.sub = app.add_subcommand(name, blurb);
        cmd.sub->add_option("--config", cmd.config, "experiment configuration file")
            ->required();
        cmd.sub->add_option("--out", cmd.out, "output directory");
        return cmd;
    };

    Cmd spectrum = add_experiment("spectrum", "sweep the oscillator family eigenvalues");
    Cmd pseudo = add_experiment("pseudospectrum",
                                "resolvent norm grid and subelliptic ratio sweep");
    Cmd threshold = add_experiment("threshold",
                                   "solve the threshold equation and emit profiles");
    Cmd decay = add_experiment("decay", "fit the weighted decay law of the flow");
    Cmd contour = add_experiment("contour",
                                 "compare contour quadrature with time stepping");
    CLI::App* verify = app.add_subcommand("verify", "run the full verification battery");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    Eigen::setNbThreads(threads);

    try {
        if (verify->parsed()) return kfp::run_acceptance_suite(std::cout) ? 0 : 1;
        const Cmd& cmd = spectrum.sub->parsed()    ? spectrum
                         : pseudo.sub->parsed()    ? pseudo
                         : threshold.sub->parsed() ? threshold
                         : decay.sub->parsed()     ? decay
                                                   : contour;
        const kfp::Config cfg = kfp::Config::parse_file(cmd.config);
        if (spectrum.sub->parsed())
            kfp::run_spectrum(cfg, cmd.out);
        else if (pseudo.sub->parsed())
            kfp::run_pseudospectrum(cfg, cmd.out);
        else if (threshold.sub->parsed())
            kfp::run_threshold(cfg, cmd.out);
        else if (decay.sub->parsed())
            kfp::run_decay(cfg, cmd.out);
        else
            kfp::run_contour(cfg, cmd.out, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kfp::exit_code_for(e);
    }
    return 0;
}
