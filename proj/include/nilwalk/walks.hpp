#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nilwalk/finite_group.hpp"
#include "nilwalk/rational.hpp"
#include "nilwalk/structure.hpp"
#include "nilwalk/unitriangular.hpp"

namespace nilwalk {

enum class WalkKind { Superclass, Nestoridi, Custom };

/// a = floor(sqrt p) + [floor(sqrt p) even], b = floor(sqrt a).
struct NestoridiParams {
  std::uint64_t p = 0;
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  /// Jump magnitude actually used: b, unless overridden.
  std::uint64_t magnitude = 0;
  /// The +-magnitude classes coincide with (or collapse onto) the +-1 classes.
  bool degenerate = false;
};

NestoridiParams nestoridi_params(std::uint64_t p, std::optional<std::uint64_t> magnitude_override = std::nullopt);

/// Size of the class of I + c E_{i,i+1} in U_n(p): (p / gcd(c, p))^{n-2};
/// nullopt on 64-bit overflow.
std::optional<std::uint64_t> superdiagonal_class_size(std::size_t n, std::uint64_t p, std::uint64_t c);

using Representative = std::variant<UnitriangularMatrix, Index>;

struct JumpClass {
  Representative representative;
  Weight weight;  // mu(Cl(representative))
  /// Set when the representative is I + c E_{i,i+1}; enables the rank-one sampler.
  std::optional<SuperdiagonalGenerator> generator;
  std::optional<std::uint64_t> size;
};

/// Conjugacy-invariant jump law given by class representatives and class
/// weights, over either U_n(p) (matrix representatives) or an enumerated
/// group (index representatives). Classes are pairwise distinct.
class JumpDistribution {
 public:
  WalkKind kind() const { return kind_; }
  bool on_matrices() const { return matrix_dim_ != 0; }
  std::size_t dim() const { return matrix_dim_; }
  const Modulus& modulus() const;
  const GroupPtr& table_group() const { return table_group_; }

  const std::vector<JumpClass>& classes() const { return classes_; }
  std::size_t k() const { return classes_.size(); }
  double mu_star() const { return mu_star_; }
  const std::optional<NestoridiParams>& nestoridi() const { return nestoridi_; }
  const std::vector<std::string>& flags() const { return flags_; }
  bool has_flag(const std::string& f) const;
  /// Every representative is a superdiagonal generator.
  bool superdiagonal_form() const;

  /// |G| as a double (p^{n(n-1)/2} for matrices).
  double group_order() const;
  std::string group_name() const;

  /// Class index with probability mu(Cl(s_a)).
  std::size_t sample_class(Rng& rng) const;

 private:
  friend JumpDistribution build_superclass_walk(std::size_t, std::uint64_t);
  friend JumpDistribution build_nestoridi_walk(std::size_t, std::uint64_t, std::optional<std::uint64_t>);
  friend JumpDistribution make_matrix_walk(WalkKind, std::size_t, Modulus, std::vector<JumpClass>, std::size_t);
  friend JumpDistribution make_group_walk(GroupPtr, std::vector<ClassRecord>, std::size_t);

  void finalize();

  WalkKind kind_ = WalkKind::Custom;
  std::size_t matrix_dim_ = 0;
  std::optional<Modulus> modulus_;
  GroupPtr table_group_;
  std::vector<JumpClass> classes_;
  std::vector<double> cumulative_;
  double mu_star_ = 0.0;
  std::optional<NestoridiParams> nestoridi_;
  std::vector<std::string> flags_;
};

/// Weight 1/(2(n-1)) on each Cl(I +- E_{i,i+1}); coinciding classes merged.
JumpDistribution build_superclass_walk(std::size_t n, std::uint64_t p);

/// Weight 1/(4(n-1)) on each Cl(I +- E_{i,i+1}) and Cl(I +- m E_{i,i+1}) with
/// m = floor(sqrt a) unless overridden; coinciding classes merged.
JumpDistribution build_nestoridi_walk(std::size_t n, std::uint64_t p,
                                      std::optional<std::uint64_t> magnitude_override = std::nullopt);

/// Class-level matrix law. Superdiagonal generators are merged symbolically;
/// any other representative requires enumerating U_n(p) within `limit`.
JumpDistribution make_matrix_walk(WalkKind kind, std::size_t n, Modulus p, std::vector<JumpClass> classes,
                                  std::size_t limit = kDefaultEnumerationLimit);

/// Class-level law on an enumerated group.
JumpDistribution make_group_walk(GroupPtr group, std::vector<ClassRecord> records,
                                 std::size_t limit = kDefaultEnumerationLimit);

/// One record of a jump-law file: a representative (strict-upper entry list or
/// element index) and the weight of its class.
struct JumpLawRecord {
  std::variant<std::vector<std::int64_t>, Index> representative;
  Weight weight;
};

/// JSON: {"records": [{"representative": [..] | idx, "weight": "num/den" | 0.25}, ...]}
/// or the bare array. Weights must sum to 1 within 1e-12.
std::vector<JumpLawRecord> parse_jump_law(std::istream& in);
std::vector<JumpLawRecord> load_jump_law(const std::filesystem::path& path);

JumpDistribution custom_matrix_walk(std::size_t n, std::uint64_t p, const std::vector<JumpLawRecord>& records,
                                    std::size_t limit = kDefaultEnumerationLimit);
JumpDistribution custom_group_walk(GroupPtr group, const std::vector<JumpLawRecord>& records,
                                   std::size_t limit = kDefaultEnumerationLimit);

/// The matrix law on the enumerated group: representatives mapped to indices,
/// classes enumerated and irreducibility checked.
SupportDecomposition decomposition_on(const JumpDistribution& jd, const EnumeratedUnitriangular& g,
                                      const LowerCentralSeries* series = nullptr);

/// The enumerated group a jump law lives on (U_n(p) enumerated, or the table group).
GroupPtr enumerate_group(const JumpDistribution& jd, std::size_t limit = kDefaultEnumerationLimit);

/// Element-level weights of jd on its enumerated group.
std::vector<ElementWeight> element_law(const JumpDistribution& jd, const FiniteGroup& g,
                                       std::size_t limit = kDefaultEnumerationLimit);

struct MatrixJump {
  std::size_t class_index;
  UnitriangularMatrix value;
};
struct IndexJump {
  std::size_t class_index;
  Index value;
};

/// U^{-1} s_a U with a ~ class weights and U uniform.
MatrixJump sample_matrix_jump(const JumpDistribution& jd, Rng& rng);
IndexJump sample_index_jump(const JumpDistribution& jd, Rng& rng);

struct WalkTrajectory {
  double time = 0.0;
  std::size_t jump_count = 0;
  std::variant<UnitriangularMatrix, Index> state = Index{0};
  /// Filled only when recording was requested.
  std::vector<double> jump_times;
  std::vector<std::size_t> jump_classes;
  std::vector<std::variant<UnitriangularMatrix, Index>> jumps;
};

/// X_t = prod_{i <= N(t)} U_i^{-1} s_{sigma_i} U_i with N(t) ~ Poisson(t).
WalkTrajectory simulate(const JumpDistribution& jd, double t, Rng& rng, bool record = false);

/// Step law of one coordinate of Z_p: residues with probabilities.
struct StepLaw {
  std::uint64_t p = 0;
  std::vector<std::pair<std::uint32_t, double>> steps;  // sorted by residue, merged

  /// Uniform over a multiset of integer jumps (reduced mod p).
  static StepLaw uniform(std::uint64_t p, const std::vector<std::int64_t>& jumps);
  std::vector<std::uint32_t> support() const;
  bool symmetric(double tol = 1e-14) const;
};

/// Abelianized walk on Z_p^{n-1}: pick a coordinate uniformly (rate 1/(n-1)
/// each), then step by the coordinate law.
struct AbelianWalkSpec {
  std::size_t coordinates = 0;
  std::uint64_t p = 0;
  StepLaw steps;
  double coordinate_rate = 0.0;
};

/// Throws UnsupportedProjectionError unless every class is a superdiagonal
/// generator and all coordinates carry the same rate and step law.
AbelianWalkSpec project_walk(const JumpDistribution& jd);

}  // namespace nilwalk
