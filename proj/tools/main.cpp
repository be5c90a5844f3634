// Command-line driver: iteration tables and dense verification runs.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dgasm/errors.hpp"
#include "dgasm/experiment.hpp"

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = std::min(text.find(',', pos), text.size());
    std::string item = text.substr(pos, next - pos);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
    pos = next + 1;
  }
  return out;
}

std::size_t parse_count(const std::string& s, const char* what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw dgasm::InvalidArgument(std::string("invalid ") + what + " '" + s + "'");
  return v;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw dgasm::Error("cannot open '" + path + "' for writing");
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Additive Schwarz / two-preconditioner GMRES laboratory for IIPG systems"};
  app.require_subcommand(1);

  std::string ns_text = "4,8,16,32,64,128";
  std::string precond_text = "b,z,b+z,b+bt";
  std::string restart_text = "none";
  std::string coarse_solver_text = "auto";
  std::string out_path;
  std::string format = "csv";
  std::string export_dir;
  dgasm::ExperimentConfig config;

  auto* table = app.add_subcommand("table", "Iteration counts and rates per (ns, precond)");
  table->add_option("--h-level", config.h_level, "Fine mesh level (h = 2^-level)")
      ->capture_default_str();
  table->add_option("--H-level", config.H_level, "Coarse mesh level")->capture_default_str();
  table->add_option("--ns", ns_text, "Comma list of subdomain counts")->capture_default_str();
  table->add_option("--precond", precond_text, "Comma list from {b,z,b+z,b+bt}")
      ->capture_default_str();
  table->add_option("--tol", config.rel_tol, "Relative residual tolerance")->capture_default_str();
  table->add_option("--restart", restart_text, "Restart length or 'none'")->capture_default_str();
  table->add_option("--coarse-tol", config.coarse_tol, "Coarse solve relative tolerance")
      ->capture_default_str();
  table->add_option("--coarse-solver", coarse_solver_text, "auto, direct or gmres")
      ->capture_default_str();
  table->add_option("--threads", config.threads, "Worker threads for subdomain solves")
      ->capture_default_str();
  table->add_option("--max-iter", config.max_iter, "Iteration cap per solve")
      ->capture_default_str();
  table->add_option("--out", out_path, "Output file (stdout if absent)");
  table->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  table->add_option("--export-dir", export_dir,
                    "Also write A_h, A0, rhs (MatrixMarket), mesh listing and partitions");

  dgasm::VerifyOptions verify_opt;
  auto* verify = app.add_subcommand("verify", "Dense checks of the constant chain and bounds");
  verify->add_option("--level", verify_opt.level, "Fine level in [2, 4]")->required();
  verify->add_option("--ns", verify_opt.ns, "Subdomain count")->capture_default_str();
  verify->add_option("--threads", verify_opt.threads, "Worker threads")->capture_default_str();
  verify->add_option("--tamper-alpha0", verify_opt.alpha0_scale,
                     "Multiply the measured alpha0 before the bound check (test hook)")
      ->capture_default_str();
  verify->add_option("--out", out_path, "JSON report file");
  verify->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*table) {
      config.ns_list.clear();
      for (const auto& s : split_list(ns_text)) config.ns_list.push_back(parse_count(s, "ns"));
      config.methods.clear();
      for (const auto& s : split_list(precond_text))
        config.methods.push_back(dgasm::parse_method(s));
      if (restart_text == "none" || restart_text.empty())
        config.restart.reset();
      else
        config.restart = parse_count(restart_text, "restart");
      config.coarse_solver = dgasm::parse_coarse_solver(coarse_solver_text);
      config.validate();

      if (!export_dir.empty()) dgasm::export_artifacts(config, export_dir);
      const dgasm::Table result = dgasm::run_table(config);
      if (format == "json") {
        emit(out_path, dgasm::to_json(result).dump(2) + "\n");
      } else {
        std::ostringstream csv;
        dgasm::write_csv(result, csv);
        emit(out_path, csv.str());
      }
      return 0;
    }

    const dgasm::VerifyReport rep = dgasm::run_verify(verify_opt);
    for (const auto& c : rep.checks)
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    std::cout << (rep.passed() ? "verify passed" : "verify FAILED") << " (level " << rep.level
              << ", " << rep.wall_time_s << " s)\n";
    if (!out_path.empty()) {
      if (format == "json") {
        emit(out_path, dgasm::to_json(rep).dump(2) + "\n");
      } else {
        std::ostringstream csv;
        csv << "check,passed,detail\n";
        for (const auto& c : rep.checks)
          csv << c.name << ',' << (c.passed ? 1 : 0) << ",\"" << c.detail << "\"\n";
        emit(out_path, csv.str());
      }
    }
    return rep.passed() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
