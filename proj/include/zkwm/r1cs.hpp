#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zkwm/field.hpp"
#include "zkwm/serialize.hpp"

namespace zkwm {

enum class Visibility : uint8_t { kConstantOne = 0, kPublic = 1, kPrivate = 2 };

/// Handle to an allocated variable: visibility class + ordinal within it.
/// Global indices (constant-one = 0, publics, then privates) are assigned at
/// finalize time so allocation order may interleave freely.
struct Variable {
  Visibility vis = Visibility::kConstantOne;
  uint32_t ordinal = 0;
  bool operator==(const Variable&) const = default;
};

inline Variable one_variable() { return {Visibility::kConstantOne, 0}; }

struct Term {
  Variable var;
  FieldScalar coeff;
};

/// Sparse linear combination over allocated variables. Constants ride on the
/// constant-one variable. Normalization merges duplicates and drops zeros.
class LinearCombination {
 public:
  LinearCombination() = default;
  LinearCombination(Variable v) { add_term(v, FieldScalar::one()); }
  static LinearCombination constant(const FieldScalar& c) {
    LinearCombination lc;
    lc.add_term(one_variable(), c);
    return lc;
  }

  void add_term(Variable v, const FieldScalar& coeff) {
    terms_.push_back({v, coeff});
  }
  LinearCombination& operator+=(const LinearCombination& o);
  LinearCombination& operator-=(const LinearCombination& o);
  LinearCombination operator+(const LinearCombination& o) const;
  LinearCombination operator-(const LinearCombination& o) const;
  LinearCombination operator*(const FieldScalar& k) const;

  void normalize();
  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

 private:
  std::vector<Term> terms_;
};

struct Stats {
  uint64_t num_constraints = 0;
  uint64_t num_public = 0;
  uint64_t num_private = 0;
};

struct SatResult {
  bool ok = true;
  uint64_t violated_index = 0;
  std::string annotation;
};

/// Full assignment, split by visibility; value(constant-one) is fixed to 1.
struct Assignment {
  std::vector<FieldScalar> public_values;
  std::vector<FieldScalar> private_values;

  FieldScalar get(Variable v) const;
  // Indexed by finalized global order: [1, public..., private...].
  FieldScalar get_global(uint64_t index) const;
  uint64_t total() const { return 1 + public_values.size() + private_values.size(); }
};

/// Finalized, immutable constraint system in flat storage.
class ConstraintSystem {
 public:
  struct CompiledTerm {
    uint64_t index;  // global variable index
    FieldScalar coeff;
  };
  struct LCSpan {
    uint64_t begin = 0;
    uint32_t count = 0;
  };
  struct CompiledConstraint {
    LCSpan a, b, c;
    uint32_t annotation_id = 0;
  };

  Stats stats() const {
    return {constraints_.size(), num_public_, num_private_};
  }
  uint64_t num_public() const { return num_public_; }
  uint64_t num_private() const { return num_private_; }
  uint64_t total_variables() const { return 1 + num_public_ + num_private_; }
  const std::vector<CompiledConstraint>& constraints() const { return constraints_; }
  const std::vector<CompiledTerm>& terms() const { return terms_; }
  const std::string& annotation(uint32_t id) const { return annotations_[id]; }

  FieldScalar eval_lc(const LCSpan& span, const Assignment& assignment) const;

  /// Transparent satisfiability check; NOT zero-knowledge. Reports the first
  /// violated constraint (lowest index) with its annotation.
  SatResult is_satisfied(const Assignment& assignment,
                         unsigned num_threads = 0) const;

  /// Lint: global indices of allocated variables no constraint references.
  std::vector<uint64_t> unused_variables() const;

  void serialize(ByteSink& sink) const;
  static ConstraintSystem deserialize(ByteReader& reader);
  Digest hash() const;

 private:
  friend class CircuitBuilder;
  uint64_t num_public_ = 0;
  uint64_t num_private_ = 0;
  std::vector<CompiledTerm> terms_;
  std::vector<CompiledConstraint> constraints_;
  std::vector<std::string> annotations_;
};

/// Single-use builder. Gadgets allocate variables, emit constraints, and (in
/// witness mode) compute values as they go; compile mode emits the identical
/// structure with no values.
class CircuitBuilder {
 public:
  enum class Mode { kCompile, kWitness };

  explicit CircuitBuilder(Mode mode);

  Mode mode() const { return mode_; }
  bool witness_mode() const { return mode_ == Mode::kWitness; }

  // `value` is consulted only in witness mode.
  Variable alloc_public(const FieldScalar& value = FieldScalar::zero());
  Variable alloc_private(const FieldScalar& value = FieldScalar::zero());

  /// Fresh private variable whose witness value is computed on the spot from
  /// previously assigned variables. The callback runs only in witness mode.
  Variable alloc_hint(const std::function<FieldScalar()>& compute);

  void enforce(const LinearCombination& a, const LinearCombination& b,
               const LinearCombination& c);

  FieldScalar value(Variable v) const;
  FieldScalar eval(const LinearCombination& lc) const;
  void set_value(Variable v, const FieldScalar& value);

  void push_scope(std::string_view name);
  void pop_scope();

  uint64_t num_constraints() const { return constraints_.size(); }
  uint64_t num_public() const { return num_public_; }
  uint64_t num_private() const { return num_private_; }

  /// Consumes the builder. The assignment is meaningful in witness mode only.
  std::pair<ConstraintSystem, Assignment> finalize() &&;

 private:
  uint64_t flatten(const LinearCombination& lc, ConstraintSystem::LCSpan& span);
  uint32_t current_annotation();

  Mode mode_;
  bool finalized_ = false;
  uint32_t num_public_ = 0;
  uint32_t num_private_ = 0;
  std::vector<FieldScalar> public_values_;
  std::vector<FieldScalar> private_values_;
  std::vector<ConstraintSystem::CompiledTerm> terms_;  // packed vis|ordinal
  std::vector<ConstraintSystem::CompiledConstraint> constraints_;
  std::vector<std::string> annotations_;
  std::unordered_map<std::string, uint32_t> annotation_ids_;
  std::vector<std::string> scope_stack_;
  std::optional<uint32_t> cached_scope_id_;
};

/// RAII scope label for constraint annotations.
class Scope {
 public:
  Scope(CircuitBuilder& b, std::string_view name) : b_(b) { b_.push_scope(name); }
  ~Scope() { b_.pop_scope(); }
  Scope(const Scope&) = delete;
  Scope& operator=(const Scope&) = delete;

 private:
  CircuitBuilder& b_;
};

}  // namespace zkwm
