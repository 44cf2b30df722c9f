#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace latgraph {

// Normalized histogram of RTT values over fixed bins. All divergence math
// requires both operands to share the same bin_edges, so comparable PDFs
// must be built from the same BinSpec.
struct EmpiricalPdf {
    std::vector<double> bin_edges;  // length B+1, strictly increasing, milliseconds
    std::vector<double> probs;      // length B, non-negative, sums to 1

    std::size_t bins() const { return probs.size(); }
    void validate() const;  // throws ValidationError on broken invariants
};

// Uniform binning over [lo, hi). Samples outside the range clamp into the
// edge bins so every PDF lives on a common support.
struct BinSpec {
    double lo = 0.0;
    double hi = 500.0;
    int count = 64;

    std::vector<double> edges() const;
};

EmpiricalPdf build_empirical_pdf(std::span<const double> rtt_ms, const BinSpec& bins);
EmpiricalPdf build_empirical_pdf(std::span<const double> rtt_ms, std::vector<double> bin_edges);

// KL(p || q) in nats. Terms with p_b = 0 contribute nothing; p_b > 0 where
// q_b = 0 yields +infinity as a distinguished value rather than a throw.
double kl_divergence(const EmpiricalPdf& p, const EmpiricalPdf& q);

// Jensen-Shannon divergence in nats, symmetric and bounded by ln 2.
double js_divergence(const EmpiricalPdf& p, const EmpiricalPdf& q);

// Pr(rtt <= tau): full mass of bins below tau plus a linear fraction of the
// straddling bin.
double confidence(const EmpiricalPdf& pdf, double tau_ms);

enum class ServiceLevel { L1 = 0, L2 = 1, L3 = 2, None = 3 };

struct ServiceRequirement {
    ServiceLevel level;
    double tau_ms;
    double epsilon;  // required confidence
};

// The three latency/reliability classes, strictest first. L1 subsumes L2
// subsumes L3.
inline constexpr std::array<ServiceRequirement, 3> kServiceLevels{{
    {ServiceLevel::L1, 100.0, 0.9999},
    {ServiceLevel::L2, 100.0, 0.99},
    {ServiceLevel::L3, 120.0, 0.99},
}};

// Strictest level whose (tau, epsilon) requirement the PDF meets, i.e.
// confidence(pdf, tau) >= epsilon; None if even level 3 fails.
ServiceLevel classify_service_level(const EmpiricalPdf& pdf);

int level_index(ServiceLevel level);
ServiceLevel level_from_index(int index);
std::string level_name(ServiceLevel level);

void to_json(nlohmann::json& j, const EmpiricalPdf& pdf);
void from_json(const nlohmann::json& j, EmpiricalPdf& pdf);

}  // namespace latgraph
