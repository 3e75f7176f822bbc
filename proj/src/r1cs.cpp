#include "zkwm/r1cs.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <cstring>
#include <thread>

#include "zkwm/errors.hpp"

namespace zkwm {
namespace {

// Packed variable encoding used inside the builder before global indices
// exist: top 2 bits carry visibility, low 62 bits the ordinal.
constexpr uint64_t kVisShift = 62;

uint64_t pack(Variable v) {
  return ((uint64_t)v.vis << kVisShift) | v.ordinal;
}

constexpr char kMagic[4] = {'Z', 'K', 'R', '1'};
constexpr uint32_t kVersion = 1;

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ZKWM_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return (unsigned)v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

}  // namespace

LinearCombination& LinearCombination::operator+=(const LinearCombination& o) {
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  return *this;
}

LinearCombination& LinearCombination::operator-=(const LinearCombination& o) {
  for (const Term& t : o.terms_) terms_.push_back({t.var, t.coeff.neg()});
  return *this;
}

LinearCombination LinearCombination::operator+(const LinearCombination& o) const {
  LinearCombination r = *this;
  r += o;
  return r;
}

LinearCombination LinearCombination::operator-(const LinearCombination& o) const {
  LinearCombination r = *this;
  r -= o;
  return r;
}

LinearCombination LinearCombination::operator*(const FieldScalar& k) const {
  LinearCombination r;
  for (const Term& t : terms_) r.add_term(t.var, t.coeff * k);
  return r;
}

void LinearCombination::normalize() {
  std::stable_sort(terms_.begin(), terms_.end(),
                   [](const Term& x, const Term& y) {
                     return pack(x.var) < pack(y.var);
                   });
  size_t out = 0;
  for (size_t i = 0; i < terms_.size();) {
    Variable v = terms_[i].var;
    FieldScalar sum = terms_[i].coeff;
    size_t j = i + 1;
    while (j < terms_.size() && terms_[j].var == v) sum += terms_[j++].coeff;
    if (!sum.is_zero()) terms_[out++] = {v, sum};
    i = j;
  }
  terms_.resize(out);
}

FieldScalar Assignment::get(Variable v) const {
  switch (v.vis) {
    case Visibility::kConstantOne:
      return FieldScalar::one();
    case Visibility::kPublic:
      if (v.ordinal >= public_values.size())
        throw MissingAssignmentError("unassigned public variable");
      return public_values[v.ordinal];
    case Visibility::kPrivate:
      if (v.ordinal >= private_values.size())
        throw MissingAssignmentError("unassigned private variable");
      return private_values[v.ordinal];
  }
  throw MissingAssignmentError("bad variable");
}

FieldScalar Assignment::get_global(uint64_t index) const {
  if (index == 0) return FieldScalar::one();
  index -= 1;
  if (index < public_values.size()) return public_values[index];
  index -= public_values.size();
  if (index < private_values.size()) return private_values[index];
  throw MissingAssignmentError("global index out of range");
}

FieldScalar ConstraintSystem::eval_lc(const LCSpan& span,
                                      const Assignment& assignment) const {
  FieldScalar acc;
  for (uint64_t i = span.begin; i < span.begin + span.count; ++i)
    acc += terms_[i].coeff * assignment.get_global(terms_[i].index);
  return acc;
}

SatResult ConstraintSystem::is_satisfied(const Assignment& assignment,
                                         unsigned num_threads) const {
  if (assignment.public_values.size() != num_public_ ||
      assignment.private_values.size() != num_private_)
    throw MissingAssignmentError("assignment size does not match system");

  const uint64_t n = constraints_.size();
  unsigned threads = std::min<uint64_t>(resolve_threads(num_threads),
                                        std::max<uint64_t>(n / 4096, 1));
  std::atomic<uint64_t> first_bad{n};

  auto run = [&](uint64_t lo, uint64_t hi) {
    for (uint64_t i = lo; i < hi; ++i) {
      if (i % 1024 == 0 && first_bad.load(std::memory_order_relaxed) < lo)
        return;  // an earlier chunk already failed
      const CompiledConstraint& cn = constraints_[i];
      FieldScalar a = eval_lc(cn.a, assignment);
      FieldScalar b = eval_lc(cn.b, assignment);
      FieldScalar c = eval_lc(cn.c, assignment);
      if (a * b != c) {
        uint64_t cur = first_bad.load(std::memory_order_relaxed);
        while (i < cur &&
               !first_bad.compare_exchange_weak(cur, i, std::memory_order_relaxed))
          ;
        return;
      }
    }
  };

  if (threads <= 1) {
    run(0, n);
  } else {
    std::vector<std::thread> pool;
    uint64_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      uint64_t lo = t * chunk, hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(run, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  uint64_t bad = first_bad.load();
  if (bad == n) return {true, 0, ""};
  return {false, bad, annotations_[constraints_[bad].annotation_id]};
}

std::vector<uint64_t> ConstraintSystem::unused_variables() const {
  std::vector<bool> seen(total_variables(), false);
  for (const CompiledTerm& t : terms_) seen[t.index] = true;
  std::vector<uint64_t> unused;
  for (uint64_t i = 1; i < seen.size(); ++i)
    if (!seen[i]) unused.push_back(i);
  return unused;
}

void ConstraintSystem::serialize(ByteSink& sink) const {
  sink.bytes(std::span<const uint8_t>((const uint8_t*)kMagic, 4));
  sink.u32(kVersion);
  sink.u64(num_public_);
  sink.u64(num_private_);
  sink.u64(constraints_.size());
  uint8_t coeff[32];
  for (const CompiledConstraint& cn : constraints_) {
    for (const LCSpan* span : {&cn.a, &cn.b, &cn.c}) {
      sink.u64(span->count);
      for (uint64_t i = span->begin; i < span->begin + span->count; ++i) {
        sink.u64(terms_[i].index);
        terms_[i].coeff.to_canonical_bytes(coeff);
        sink.bytes(std::span<const uint8_t>(coeff, 32));
      }
    }
  }
  sink.u64(annotations_.size());
  for (const std::string& s : annotations_) sink.str(s);
  for (const CompiledConstraint& cn : constraints_) sink.u32(cn.annotation_id);
}

ConstraintSystem ConstraintSystem::deserialize(ByteReader& reader) {
  auto magic = reader.bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw MalformedFileError("bad constraint-system magic");
  if (reader.u32() != kVersion)
    throw MalformedFileError("unsupported constraint-system version");
  ConstraintSystem cs;
  cs.num_public_ = reader.u64();
  cs.num_private_ = reader.u64();
  uint64_t n = reader.u64();
  cs.constraints_.reserve(n);
  for (uint64_t k = 0; k < n; ++k) {
    CompiledConstraint cn;
    for (LCSpan* span : {&cn.a, &cn.b, &cn.c}) {
      uint64_t count = reader.u64();
      span->begin = cs.terms_.size();
      span->count = (uint32_t)count;
      for (uint64_t i = 0; i < count; ++i) {
        uint64_t index = reader.u64();
        auto bytes = reader.bytes(32);
        auto coeff = FieldScalar::from_canonical_bytes(bytes.data());
        if (!coeff) throw MalformedFileError("non-canonical field element");
        if (index >= 1 + cs.num_public_ + cs.num_private_)
          throw MalformedFileError("variable index out of range");
        cs.terms_.push_back({index, *coeff});
      }
    }
    cs.constraints_.push_back(cn);
  }
  uint64_t table = reader.u64();
  cs.annotations_.reserve(table);
  for (uint64_t i = 0; i < table; ++i) cs.annotations_.push_back(reader.str());
  for (CompiledConstraint& cn : cs.constraints_) {
    cn.annotation_id = reader.u32();
    if (cn.annotation_id >= cs.annotations_.size())
      throw MalformedFileError("annotation id out of range");
  }
  return cs;
}

Digest ConstraintSystem::hash() const {
  HashingSink sink;
  serialize(sink);
  return sink.finish();
}

CircuitBuilder::CircuitBuilder(Mode mode) : mode_(mode) {
  annotations_.push_back("");
  annotation_ids_[""] = 0;
}

Variable CircuitBuilder::alloc_public(const FieldScalar& value) {
  if (finalized_) throw BuilderFinalizedError("alloc after finalize");
  Variable v{Visibility::kPublic, num_public_++};
  if (witness_mode()) public_values_.push_back(value);
  return v;
}

Variable CircuitBuilder::alloc_private(const FieldScalar& value) {
  if (finalized_) throw BuilderFinalizedError("alloc after finalize");
  Variable v{Visibility::kPrivate, num_private_++};
  if (witness_mode()) private_values_.push_back(value);
  return v;
}

Variable CircuitBuilder::alloc_hint(const std::function<FieldScalar()>& compute) {
  return alloc_private(witness_mode() ? compute() : FieldScalar::zero());
}

void CircuitBuilder::enforce(const LinearCombination& a,
                             const LinearCombination& b,
                             const LinearCombination& c) {
  if (finalized_) throw BuilderFinalizedError("enforce after finalize");
  ConstraintSystem::CompiledConstraint cn;
  LinearCombination na = a, nb = b, nc = c;
  na.normalize();
  nb.normalize();
  nc.normalize();
  flatten(na, cn.a);
  flatten(nb, cn.b);
  flatten(nc, cn.c);
  cn.annotation_id = current_annotation();
  constraints_.push_back(cn);
}

uint64_t CircuitBuilder::flatten(const LinearCombination& lc,
                                 ConstraintSystem::LCSpan& span) {
  span.begin = terms_.size();
  span.count = (uint32_t)lc.terms().size();
  for (const Term& t : lc.terms()) terms_.push_back({pack(t.var), t.coeff});
  return span.begin;
}

FieldScalar CircuitBuilder::value(Variable v) const {
  if (!witness_mode())
    throw MissingAssignmentError("value() outside witness mode");
  switch (v.vis) {
    case Visibility::kConstantOne:
      return FieldScalar::one();
    case Visibility::kPublic:
      return public_values_.at(v.ordinal);
    case Visibility::kPrivate:
      return private_values_.at(v.ordinal);
  }
  throw MissingAssignmentError("bad variable");
}

FieldScalar CircuitBuilder::eval(const LinearCombination& lc) const {
  FieldScalar acc;
  for (const Term& t : lc.terms()) acc += t.coeff * value(t.var);
  return acc;
}

void CircuitBuilder::set_value(Variable v, const FieldScalar& value) {
  if (!witness_mode()) return;
  switch (v.vis) {
    case Visibility::kPublic:
      public_values_.at(v.ordinal) = value;
      return;
    case Visibility::kPrivate:
      private_values_.at(v.ordinal) = value;
      return;
    default:
      throw MissingAssignmentError("cannot assign the constant-one variable");
  }
}

void CircuitBuilder::push_scope(std::string_view name) {
  scope_stack_.emplace_back(name);
  cached_scope_id_.reset();
}

void CircuitBuilder::pop_scope() {
  scope_stack_.pop_back();
  cached_scope_id_.reset();
}

uint32_t CircuitBuilder::current_annotation() {
  if (cached_scope_id_) return *cached_scope_id_;
  std::string path;
  for (const std::string& s : scope_stack_) {
    if (!path.empty()) path += '/';
    path += s;
  }
  auto [it, inserted] = annotation_ids_.try_emplace(path, (uint32_t)annotations_.size());
  if (inserted) annotations_.push_back(path);
  cached_scope_id_ = it->second;
  return it->second;
}

std::pair<ConstraintSystem, Assignment> CircuitBuilder::finalize() && {
  if (finalized_) throw BuilderFinalizedError("finalize called twice");
  finalized_ = true;

  // Rewrite packed (visibility, ordinal) indices to the global order:
  // constant-one, publics, then privates.
  for (auto& t : terms_) {
    auto vis = (Visibility)(t.index >> kVisShift);
    uint64_t ordinal = t.index & ((uint64_t(1) << kVisShift) - 1);
    switch (vis) {
      case Visibility::kConstantOne:
        t.index = 0;
        break;
      case Visibility::kPublic:
        t.index = 1 + ordinal;
        break;
      case Visibility::kPrivate:
        t.index = 1 + num_public_ + ordinal;
        break;
    }
  }

  ConstraintSystem cs;
  cs.num_public_ = num_public_;
  cs.num_private_ = num_private_;
  cs.terms_ = std::move(terms_);
  cs.constraints_ = std::move(constraints_);
  cs.annotations_ = std::move(annotations_);

  Assignment assignment;
  assignment.public_values = std::move(public_values_);
  assignment.private_values = std::move(private_values_);
  return {std::move(cs), std::move(assignment)};
}

}  // namespace zkwm
