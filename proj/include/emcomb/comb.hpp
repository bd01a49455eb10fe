#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "emcomb/dynamics.hpp"
#include "emcomb/params.hpp"
#include "emcomb/spectral.hpp"

namespace emcomb {

/// Tooth position on the lattice k1 f1 + k2 f2 (offsets from the pump).
struct LatticeAssignment {
    Tooth tooth;
    int k1 = 0;
    int k2 = 0;
    double residual = 0.0;  // Hz, detuning - (k1 f1 + k2 f2)
    int order = 0;          // min(|k1|, |k2|) when both are nonzero
    bool assigned = false;  // false when no lattice point lies within tol

    friend bool operator==(const LatticeAssignment&, const LatticeAssignment&) = default;
};

/// Smallest |m1 f1 + m2 f2| over nonzero (m1, m2) with |m| <= bound.
[[nodiscard]] double lattice_gap(double f1_hz, double f2_hz, int bound);

/// Nearest lattice point for each tooth inside [-kmax, kmax]^2. Ties go to
/// the smaller |k1|+|k2|, then the smaller |k2|. Throws AmbiguityError when
/// a second lattice point also lies within tol of a tooth, which can only
/// happen when the lattice gap over the doubled box is below 2 tol.
[[nodiscard]] std::vector<LatticeAssignment> lattice_fit(const std::vector<Tooth>& teeth, double f1_hz, double f2_hz,
                                                         double tol_hz, int kmax = 6);

/// max(3 rbw, 1e-3 f1).
[[nodiscard]] double default_tolerance(double rbw_hz, double f1_hz);

enum class Regime { SinglePeak, Comb1, Comb2, Hybrid };

[[nodiscard]] std::string to_string(Regime r);
[[nodiscard]] Regime regime_from_string(const std::string& s);

struct CombClassification {
    Regime regime = Regime::SinglePeak;
    std::vector<LatticeAssignment> assignments;
    double dominant_spacing = 0.0;  // Hz, 0 for SinglePeak
    std::set<int> mixing_orders;    // orders >= 1 that occur
    std::size_t unassigned = 0;
};

[[nodiscard]] CombClassification classify(const std::vector<Tooth>& teeth, double f1_hz, double f2_hz, double tol_hz,
                                          int kmax = 6);

/// JSON {format_version, regime, dominant_spacing_hz, teeth: [...]}.
void write_classification_json(std::ostream& os, const CombClassification& c);

/// Cavity response to a prescribed mechanical cycle b_j = b_static + B exp(-i w_j t).
/// alpha[k + kmax] is the amplitude of exp(-i k w_j t) in a(t), i.e. the tooth
/// at pump + k w_j.
struct BesselComb {
    double modulation_index = 0.0;  // beta = 2 g_j |B| / w_j
    double mech_freq = 0.0;         // Hz
    int kmax = 0;
    std::vector<cdouble> alpha;

    [[nodiscard]] cdouble at(int k) const;
};

/// Exact Bessel series for the cavity under a prescribed cycle:
///   alpha_k = sqrt(kappa_e) S_in sum_n J_n(beta) J_{n+k}(beta) / (kappa/2 - i(D - n w_j))
/// with D the static-shift corrected detuning at the lower fixed point.
/// kmax < 0 picks the smallest order whose discarded tail holds < 1e-10 of
/// the total; an explicit kmax below that throws TruncationError.
[[nodiscard]] BesselComb bessel_comb(const SystemParams& params, const PumpCondition& pump, cdouble mech_amplitude,
                                     int mode, int kmax = -1);

/// Amplitude B giving modulation index beta on mode `mode`.
[[nodiscard]] double amplitude_for_index(const SystemParams& params, int mode, double beta);

enum class Competition { Mode1Wins, Mode2Wins, Coexist };

[[nodiscard]] std::string to_string(Competition c);

/// Mode j wins when the other mode's oscillation amplitude is below 1% of
/// mode j's and the spectrum is a comb of mode j. Throws
/// IndeterminateOutcomeError for Undecided or FixedPoint attractors.
[[nodiscard]] Competition competition_outcome(const AttractorReport& report, const CombClassification& c);

}  // namespace emcomb
