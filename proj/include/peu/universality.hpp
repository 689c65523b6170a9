#pragma once

#include <optional>

#include "peu/adversary.hpp"
#include "peu/flemma.hpp"
#include "peu/signals.hpp"

namespace peu {

struct VerdictOptions {
    CertificateOptions certificate;
    Index p = 1;  // output dimension of the attached output-level counterexample
};

struct UniversalityVerdict {
    bool universal = false;
    Index pe_order_needed = 0;
    PEReport pe_report;
    std::optional<CounterexampleCertificate> counterexample;
    std::optional<OutputCounterexample> output_counterexample;
};

/// u is universal for the L-restricted behavior of every controllable n-state
/// system iff it is persistently exciting of order n + L. Non-universal inputs
/// come back with a verified certificate and its output-level extension.
inline UniversalityVerdict universality_verdict(const Signal& u, Index n, Index depth,
                                                const VerdictOptions& opt = {}) {
    detail::require(n >= 1, "state dimension n must be at least 1");
    detail::require(depth >= 1 && depth <= u.length(), "L must lie in [1, T]");
    UniversalityVerdict out;
    out.pe_order_needed = n + depth;
    out.pe_report = pe_order(u, opt.certificate.rtol);
    out.universal = out.pe_report.max_order >= out.pe_order_needed;
    if (!out.universal) {
        out.counterexample = construct_certificate(u, n, depth, opt.certificate);
        out.output_counterexample = extend_to_output(*out.counterexample, u, opt.p, opt.certificate.rtol);
    }
    return out;
}

}  // namespace peu
