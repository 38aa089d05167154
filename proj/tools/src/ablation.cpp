#include "cadgl/cli/ablation.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "cadgl/error.hpp"

namespace cadgl::cli {

AblationReport run_ablation(const DDIDataset& dataset, const Split& split, const TrainConfig& base,
                            std::size_t seeds) {
  AblationReport report;
  const std::array<std::tuple<const char*, bool, bool>, 3> configs = {
      {{"lcp_only", true, false}, {"mcp_only", false, true}, {"both", true, true}}};
  for (const auto& [label, lcp, mcp] : configs) {
    TrainConfig config = base;
    config.use_lcp = lcp;
    config.use_mcp = mcp;
    const auto start = std::chrono::steady_clock::now();
    AblationRow row{label, lcp, mcp, run_repeated(dataset, split, config, seeds), 0.0};
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.rows.push_back(std::move(row));
  }
  const MetricSummary& lcp = report.rows[0].result.accuracy;
  const MetricSummary& mcp = report.rows[1].result.accuracy;
  const MetricSummary& both = report.rows[2].result.accuracy;
  report.ordering_holds = both.mean >= mcp.mean && mcp.mean >= lcp.mean;
  report.within_one_std = both.mean >= lcp.mean - lcp.std && both.mean >= mcp.mean - mcp.std;
  if (!report.ordering_holds) {
    report.warnings.push_back(fmt::format(
        "accuracy ordering both >= mcp_only >= lcp_only does not hold ({:.4f}, {:.4f}, {:.4f})",
        both.mean, mcp.mean, lcp.mean));
  }
  if (!report.within_one_std) {
    report.warnings.push_back("both-processor accuracy is more than one std below a single "
                              "processor");
  }
  return report;
}

std::string format_ablation_table(const AblationReport& report) {
  std::string out = "config\tlcp\tmcp\taccuracy\tauroc\tauprc\tf1\n";
  for (const auto& row : report.rows) {
    const auto& r = row.result;
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", row.label, row.use_lcp ? "yes" : "no",
                       row.use_mcp ? "yes" : "no", format_mean_std(r.accuracy),
                       format_mean_std(r.auroc), format_mean_std(r.auprc), format_mean_std(r.f1));
  }
  return out;
}

std::string curve_csv(const RepeatedResult& result) {
  if (result.histories.empty()) throw ContractError("curve_csv: no runs");
  const std::size_t epochs = result.histories.front().size();
  std::string out = "epoch,val_loss,val_auroc,val_auprc\n";
  for (std::size_t e = 0; e < epochs; ++e) {
    double loss = 0.0, roc = 0.0, prc = 0.0;
    for (const auto& h : result.histories) {
      loss += h.at(e).val_loss;
      roc += h.at(e).val.auroc.value_or(std::nan(""));
      prc += h.at(e).val.auprc.value_or(std::nan(""));
    }
    const double n = static_cast<double>(result.histories.size());
    out += fmt::format("{},{:.6f},{:.6f},{:.6f}\n", result.histories.front()[e].epoch, loss / n,
                       roc / n, prc / n);
  }
  return out;
}

}  // namespace cadgl::cli
