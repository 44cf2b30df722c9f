#include "latgraph/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "latgraph/errors.hpp"

namespace latgraph {

namespace {

void require_same_bins(const EmpiricalPdf& p, const EmpiricalPdf& q) {
    if (p.bin_edges != q.bin_edges) {
        throw ShapeError("pdfs use different bin_edges; rebuild them from one BinSpec");
    }
}

}  // namespace

void EmpiricalPdf::validate() const {
    if (bin_edges.size() < 2 || probs.size() + 1 != bin_edges.size()) {
        throw ValidationError("pdf needs B+1 edges for B bins");
    }
    for (std::size_t i = 0; i + 1 < bin_edges.size(); ++i) {
        if (!(bin_edges[i] < bin_edges[i + 1])) {
            throw ValidationError("bin_edges must be strictly increasing");
        }
    }
    double total = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw ValidationError("negative bin probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("bin probabilities sum to " + std::to_string(total));
    }
}

std::vector<double> BinSpec::edges() const {
    if (count < 1 || !(lo < hi)) throw ValidationError("invalid bin spec");
    std::vector<double> e(static_cast<std::size_t>(count) + 1);
    const double width = (hi - lo) / count;
    for (int i = 0; i <= count; ++i) e[static_cast<std::size_t>(i)] = lo + width * i;
    e.back() = hi;  // avoid accumulated rounding at the top edge
    return e;
}

EmpiricalPdf build_empirical_pdf(std::span<const double> rtt_ms, const BinSpec& bins) {
    return build_empirical_pdf(rtt_ms, bins.edges());
}

EmpiricalPdf build_empirical_pdf(std::span<const double> rtt_ms, std::vector<double> bin_edges) {
    if (rtt_ms.empty()) throw InsufficientDataError("cannot build a pdf from zero samples");
    const std::size_t n_bins = bin_edges.size() - 1;
    std::vector<double> counts(n_bins, 0.0);
    for (double v : rtt_ms) {
        // upper_bound - 1 gives the bin; out-of-range values clamp to the edge bins
        auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), v);
        std::ptrdiff_t idx = (it - bin_edges.begin()) - 1;
        idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(n_bins) - 1);
        counts[static_cast<std::size_t>(idx)] += 1.0;
    }
    EmpiricalPdf pdf{std::move(bin_edges), std::move(counts)};
    const double total = static_cast<double>(rtt_ms.size());
    for (double& p : pdf.probs) p /= total;
    return pdf;
}

double kl_divergence(const EmpiricalPdf& p, const EmpiricalPdf& q) {
    require_same_bins(p, q);
    double acc = 0.0;
    for (std::size_t b = 0; b < p.probs.size(); ++b) {
        const double pb = p.probs[b];
        if (pb <= 0.0) continue;  // 0 * log(0/q) := 0
        const double qb = q.probs[b];
        if (qb <= 0.0) return std::numeric_limits<double>::infinity();
        acc += pb * std::log(pb / qb);
    }
    return std::max(acc, 0.0);  // guard tiny negative round-off for p == q
}

double js_divergence(const EmpiricalPdf& p, const EmpiricalPdf& q) {
    require_same_bins(p, q);
    EmpiricalPdf m{p.bin_edges, std::vector<double>(p.probs.size())};
    for (std::size_t b = 0; b < p.probs.size(); ++b) {
        m.probs[b] = 0.5 * (p.probs[b] + q.probs[b]);
    }
    return 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m);
}

double confidence(const EmpiricalPdf& pdf, double tau_ms) {
    if (!(tau_ms > 0.0)) throw ValidationError("tau must be positive");
    if (tau_ms <= pdf.bin_edges.front()) return 0.0;
    if (tau_ms >= pdf.bin_edges.back()) return 1.0;
    double mass = 0.0;
    for (std::size_t b = 0; b < pdf.probs.size(); ++b) {
        const double lo = pdf.bin_edges[b];
        const double hi = pdf.bin_edges[b + 1];
        if (tau_ms >= hi) {
            mass += pdf.probs[b];
        } else {
            mass += pdf.probs[b] * (tau_ms - lo) / (hi - lo);
            break;
        }
    }
    return mass;
}

ServiceLevel classify_service_level(const EmpiricalPdf& pdf) {
    for (const auto& req : kServiceLevels) {
        if (confidence(pdf, req.tau_ms) >= req.epsilon) return req.level;
    }
    return ServiceLevel::None;
}

int level_index(ServiceLevel level) { return static_cast<int>(level); }

ServiceLevel level_from_index(int index) {
    if (index < 0 || index > 3) throw ValidationError("service level index out of range");
    return static_cast<ServiceLevel>(index);
}

std::string level_name(ServiceLevel level) {
    switch (level) {
        case ServiceLevel::L1: return "L1";
        case ServiceLevel::L2: return "L2";
        case ServiceLevel::L3: return "L3";
        case ServiceLevel::None: return "None";
    }
    return "?";
}

void to_json(nlohmann::json& j, const EmpiricalPdf& pdf) {
    j = nlohmann::json{{"bin_edges", pdf.bin_edges}, {"probs", pdf.probs}};
}

void from_json(const nlohmann::json& j, EmpiricalPdf& pdf) {
    j.at("bin_edges").get_to(pdf.bin_edges);
    j.at("probs").get_to(pdf.probs);
    pdf.validate();
}

}  // namespace latgraph
