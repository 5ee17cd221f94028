#include "scopf/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "scopf/benders.hpp"
#include "scopf/case_io.hpp"
#include "scopf/report.hpp"

namespace scopf {

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Security-constrained AC optimal power flow solver"};
  app.name("solve");

  std::string casePath;
  double filter = 1.0;
  int workers = 1;
  double tol = 1e-4;
  int maxIters = 100;
  std::string penalty = "1000,1000,1000";
  double delta = 1.0;
  std::string format = "json";
  std::string outPath;
  std::string traceDir;

  app.add_option("--case", casePath, "case file (JSON)")
      ->envname("SCACOPF_CASE")
      ->required();
  app.add_option("--filter", filter,
                 "kept fraction of ranked contingencies, in (0,1]")
      ->envname("SCACOPF_FILTER");
  app.add_option("--workers", workers, "parallel workers for security checks")
      ->envname("SCACOPF_WORKERS");
  app.add_option("--tol", tol, "total mismatch convergence threshold")
      ->envname("SCACOPF_TOL");
  app.add_option("--max-iters", maxIters, "decomposition iteration limit")
      ->envname("SCACOPF_MAX_ITERS");
  app.add_option("--penalty", penalty, "mismatch weights wP,wQ,wS")
      ->envname("SCACOPF_PENALTY");
  app.add_option("--delta", delta, "weight on the mismatch term")
      ->envname("SCACOPF_DELTA");
  app.add_option("--format", format, "report format: json|csv|text")
      ->envname("SCACOPF_FORMAT");
  app.add_option("--out", outPath, "write the report here instead of stdout")
      ->envname("SCACOPF_OUT");
  app.add_option("--trace", traceDir, "directory for per-contingency traces")
      ->envname("SCACOPF_TRACE");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  SolverConfig config;
  config.filterLevel = filter;
  config.workers = workers;
  config.tolMismatch = tol;
  config.maxIterations = maxIters;
  config.deltaWeight = delta;
  config.traceDir = traceDir;
  {
    std::istringstream ps(penalty);
    std::string tok;
    std::vector<double> w;
    while (std::getline(ps, tok, ',')) {
      try {
        w.push_back(std::stod(tok));
      } catch (const std::exception&) {
        err << "error: bad --penalty component '" << tok << "'\n";
        return 1;
      }
    }
    if (w.size() != 3) {
      err << "error: --penalty expects three comma-separated weights\n";
      return 1;
    }
    config.penalty = {w[0], w[1], w[2]};
  }

  ReportFormat fmt;
  try {
    fmt = report_format_from_string(format);
  } catch (const ReportError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  if (!traceDir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(traceDir, ec);
    if (ec) {
      err << "error: cannot create trace directory '" << traceDir << "'\n";
      return 1;
    }
  }

  Grid grid;
  try {
    grid = load_case_file(casePath);
  } catch (const IslandedError& e) {
    err << "the original problem is infeasible: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    ScopfOutcome outcome = run(grid, config);
    SCOPFReport report = make_report(grid, outcome);
    std::string rendered = render_report(report, fmt);
    if (outPath.empty()) {
      out << rendered;
    } else {
      std::ofstream f(outPath, std::ios::binary);
      if (!f) {
        err << "error: cannot write '" << outPath << "'\n";
        return 1;
      }
      f << rendered;
    }
    for (const std::string& w : outcome.warnings) err << "warning: " << w << "\n";
    switch (outcome.status) {
      case RunStatus::kOptimal:
        return 0;
      case RunStatus::kIterationLimit:
        return 2;
      case RunStatus::kInfeasible:
        err << "the original problem is infeasible\n";
        return 3;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace scopf
