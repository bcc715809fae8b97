#pragma once

#include "evtfair/discrimination.hpp"
#include "evtfair/evt.hpp"
#include "evtfair/scoring.hpp"
#include "evtfair/synthgen.hpp"
#include "evtfair/tabular.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace evtfair {

struct SamplerConfig {
    std::size_t k_min = 10;
    std::size_t k_max = 50;
    std::size_t m = 1;  // synthetic rows appended per failed round
    double timeout_secs = 1200.0;
    std::uint64_t seed = 0;
    std::size_t max_iterations = 100000;

    void validate() const;
};

enum class TailStatus {
    Sampled,     // CV test passed, tail not fitted yet
    Fitted,
    Degenerate,  // top-k mean <= 0: no tail discrimination
    Failed,
};

std::string_view to_string(TailStatus s) noexcept;
TailStatus tail_status_from_string(std::string_view s);

struct GroupTailReport {
    std::string group_value;
    std::size_t n_real = 0;
    std::size_t n_synthetic = 0;
    std::size_t iterations = 0;
    std::vector<CdSample> cds;  // real rows first, then synthetic in generation order
    double acd = 0.0;           // over real rows
    double cvar = 0.0;          // over real rows
    bool passed_cv = false;
    TailStatus status = TailStatus::Failed;
    std::string failure;  // "timeout", "iteration-cap" or a fit error code
    std::optional<EvtFit> fit;
    QqDiagnostic qq;
    std::vector<double> exceedances;
    std::map<std::uint64_t, double> return_levels;

    std::vector<double> cd_values() const;
};

// Grows the target group's counterfactual sample until the CV test passes,
// the group is degenerate, or the time/iteration budget runs out.
GroupTailReport generate_tail_samples(const ScoreModel& model, const Dataset& dataset, const GroupSpec& group,
                                      const std::string& target_value, const TabularGenerator& generator,
                                      const SamplerConfig& cfg, double cvar_alpha = 0.95);

inline constexpr double kEcdThreshold = 0.05;

struct EcdResult {
    double ecd = 0.0;
    bool discriminates = false;
    bool degenerate = false;  // a side had no valid tail and counted as mu = 0
};

// ecd = mu_u - mu_p of the fitted GEV locations; an empty side is degenerate.
EcdResult compute_ecd(const std::optional<EvtFit>& unprivileged, const std::optional<EvtFit>& privileged);

struct AuditConfig {
    SamplerConfig sampler;
    int bootstrap_resamples = 200;
    double cvar_alpha = 0.95;
    std::vector<std::uint64_t> return_periods{500, 1000, 2000};
};

struct AuditMetadata {
    std::string tool_version;
    std::string dataset_hash;
    std::string model_id;
};

struct AuditReport {
    AuditMetadata metadata;
    GroupSpec group;
    AuditConfig config;
    GroupTailReport privileged;
    GroupTailReport unprivileged;
    double acd_diff = 0.0;   // ACD_u - ACD_p
    double cvar_diff = 0.0;  // CVaR_u - CVaR_p
    std::optional<double> ecd;  // empty when either side failed
    bool ecd_degenerate = false;
    bool discriminates = false;
    std::map<std::string, std::string> diagnostics;  // sidecar name -> path
};

using GeneratorFactory = std::function<GeneratorPtr(const std::string& target_value)>;

// Copula generators fitted on `train` for each requested group value.
GeneratorFactory copula_factory(const Dataset& train, const GroupSpec& group);

AuditReport audit(const ScoreModel& model, const Dataset& dataset, const GroupSpec& group, const AuditConfig& cfg,
                  const GeneratorFactory& generators);

// Fits the tail of a report whose CV test passed; leaves others unchanged.
void fit_group_tail(GroupTailReport& report, const AuditConfig& cfg, std::uint64_t seed);

}  // namespace evtfair
