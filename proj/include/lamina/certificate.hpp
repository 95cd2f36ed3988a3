#pragma once

// Construction of a fully carried lamination, recorded as a tree of locally
// re-checkable steps: collar, chain regluing, product extensions, non-disk
// extensions and cycle extensions. Every 2-D claim is reduced to holonomy
// relations that the checker re-verifies.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lamina/decompose.hpp"
#include "lamina/lamination.hpp"

namespace lamina {

/// Preconditions of the construction that fail for the given complex.
class CertificateError : public std::runtime_error {
 public:
  CertificateError(const std::string& what, std::vector<std::string> items)
      : std::runtime_error(what), items_(std::move(items)) {}
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::vector<std::string> items_;
};

struct LaminationOptions {
  Rational epsilon = Rational(1, 1000000000000L);
  int samples = 48;                            // sample points per holonomy relation
  std::optional<CollarLamination> gluing;      // default: collar_lamination()
  bool reverse_independent_chains = false;     // alternative valid processing order
};

// Mutable state threaded through the pipeline.
struct PipelineState {
  BranchedSurfaceComplex b;
  CollarComplex collar;
  CollarLamination lam;
  std::set<SectorId, IdLess> finalized;  // branches whose boundary lamination is settled
  std::map<SectorId, Occurrence, IdLess> punctures;  // chain disks, where they were reglued
  std::vector<nlohmann::json> steps;
  LaminationOptions options;
};

PipelineState start_pipeline(const BranchedSurfaceComplex& b, const LaminationOptions& options = {});

/// Reglue and product-extend every chain disk, feeders first. Throws
/// LaminationError on a chain order violation.
void run_chain_pipeline(PipelineState& st, const ChainCycleDecomposition& d);

void run_nondisk_pipeline(PipelineState& st);

/// Appends one CYCLE_EXTEND or MOBIUS_EXTEND step. Throws LaminationError for
/// an UNKNOWN core or tails on an unknown side.
void run_cycle_pipeline(PipelineState& st, const Cycle& cycle, const CoreAnnulus& core);

struct LaminationCertificate {
  nlohmann::json document;
};

/// Throws CertificateError when a sink disk remains after collapsing the
/// confirmed bubbles, or non-disk branches lack an essential-curve assertion.
LaminationCertificate build_lamination_certificate(const BranchedSurfaceComplex& b, const LaminationOptions& options = {});

struct CheckReport {
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
};

/// Replays the certificate step by step against its embedded complex. With
/// `rebuild`, also demands that a fresh build reproduces it exactly.
CheckReport check_lamination_certificate(const nlohmann::json& doc, bool rebuild = true);

/// Final boundary lamination per track, as recorded.
std::map<std::string, std::vector<AnnulusLamination>> final_track_laminations(const nlohmann::json& doc);

nlohmann::json to_json(const AnnulusLamination& mu);
AnnulusLamination lamination_from_json(const nlohmann::json& j);

}  // namespace lamina
