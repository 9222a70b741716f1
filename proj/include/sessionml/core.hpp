// Types, session types, behaviours and constraint sets shared by both inference levels.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "sessionml/syntax.hpp"

namespace sessionml {

// Fresh-variable supply shared by every kind of variable in one analysis run.
struct Supply {
  uint32_t next = 0;
  uint32_t fresh() { return ++next; }
};

// ---------------------------------------------------------------- types

enum class TypeTag : uint8_t { Unit, Bool, Int, Pair, Fun, Ses, Var };

struct TypeNode;
using Type = std::shared_ptr<const TypeNode>;

struct TypeNode {
  TypeTag tag;
  Type a, b;
  // Var: alpha; Fun: beta annotation; Ses: rho.
  uint32_t id = 0;
  size_t hash = 0;
};

Type t_unit();
Type t_bool();
Type t_int();
Type t_pair(Type a, Type b);
Type t_fun(Type arg, Type res, uint32_t beta);
Type t_ses(uint32_t rho);
Type t_var(uint32_t alpha);

bool equal(const Type& x, const Type& y);
std::string show(const Type& t);

struct TypeHash {
  size_t operator()(const Type& t) const { return t->hash; }
};
struct TypeEq {
  bool operator()(const Type& x, const Type& y) const { return equal(x, y); }
};

// ---------------------------------------------------------------- session types

enum class SesTag : uint8_t { End, Out, In, Deleg, Resume, Internal, External, Var, IVar, EVar };

struct SessionNode;
using Session = std::shared_ptr<const SessionNode>;

struct SessionNode {
  SesTag tag;
  Type payload;       // Out/In
  Session carried;    // Deleg/Resume
  Session next;       // Out/In/Deleg/Resume
  std::map<std::string, Session> branches;  // Internal: I; External: I1 and I2
  std::set<std::string> active;             // External: I1
  uint32_t id = 0;                          // Var/IVar/EVar
  size_t hash = 0;
};

Session s_end();
Session s_out(Type t, Session k);
Session s_in(Type t, Session k);
Session s_deleg(Session d, Session k);
Session s_resume(Session r, Session k);
Session s_internal(std::map<std::string, Session> br);
Session s_external(std::set<std::string> active, std::map<std::string, Session> br);
Session s_var(uint32_t psi);
Session s_ivar(uint32_t psi);
Session s_evar(uint32_t psi);

bool equal(const Session& x, const Session& y);
std::string show(const Session& s);
bool is_choice_var(const Session& s);

struct SessionHash {
  size_t operator()(const Session& s) const { return s->hash; }
};
struct SessionEq {
  bool operator()(const Session& x, const Session& y) const { return equal(x, y); }
};

// ---------------------------------------------------------------- behaviours

enum class BehTag : uint8_t { Var, Tau, Seq, Plus, Rec, Spawn, Push, Out, In, Deleg, Resume, Select, Offer };

struct BehNode;
using Beh = std::shared_ptr<const BehNode>;

struct BehNode {
  BehTag tag;
  Beh a, b;
  // Var/Rec: beta; Push: label; pops and Offer: rho.
  uint32_t x = 0;
  // Deleg: delegated rho; Resume: resumed label.
  uint32_t y = 0;
  Type payload;                                     // Out/In
  Session ses;                                      // Push
  std::string choice;                               // Select
  std::vector<std::pair<std::string, Beh>> branches;  // Offer, sorted by label
  Span span;                                        // diagnostics only, ignored by equality
  size_t hash = 0;
};

Beh b_var(uint32_t beta);
Beh b_tau();
Beh b_seq(Beh a, Beh b);
Beh b_plus(Beh a, Beh b);
Beh b_rec(uint32_t beta, Beh body);
Beh b_spawn(Beh body);
Beh b_push(uint32_t label, Session s, Span sp = {});
Beh b_out(uint32_t rho, Type t, Span sp = {});
Beh b_in(uint32_t rho, Type t, Span sp = {});
Beh b_deleg(uint32_t rho, uint32_t rho_d, Span sp = {});
Beh b_resume(uint32_t rho, uint32_t label, Span sp = {});
Beh b_select(uint32_t rho, std::string choice, Span sp = {});
Beh b_offer(uint32_t rho, std::vector<std::pair<std::string, Beh>> br, Span sp = {});

bool equal(const Beh& x, const Beh& y);
// Raw form: every constructor printed.
std::string show(const Beh& b);
// Normalised form: spurious taus removed.
std::string show_simplified(const Beh& b);
Beh simplify(const Beh& b);
bool is_communication(const Beh& b);

struct BehHash {
  size_t operator()(const Beh& b) const { return b->hash; }
};
struct BehEq {
  bool operator()(const Beh& x, const Beh& y) const { return equal(x, y); }
};

// ---------------------------------------------------------------- generic traversals

struct Mapper {
  std::function<std::optional<Type>(uint32_t)> alpha;
  std::function<uint32_t(uint32_t)> beta;
  std::function<uint32_t(uint32_t)> rho;
  std::function<std::optional<Session>(const SessionNode&)> psi;  // Var/IVar/EVar nodes
};

Type map_type(const Type& t, const Mapper& m);
Session map_session(const Session& s, const Mapper& m);
Beh map_beh(const Beh& b, const Mapper& m);

struct FreeVars {
  std::set<uint32_t> alpha, beta, rho, psi;  // psi includes choice variables
  std::set<uint32_t> labels;
  void add(const Type& t);
  void add(const Session& s);
  void add(const Beh& b);
};

// ---------------------------------------------------------------- regions

// A region term: a region variable rho or a source label l.
struct Region {
  bool is_label = false;
  uint32_t id = 0;
  auto operator<=>(const Region&) const = default;
};
inline Region rvar(uint32_t rho) { return {false, rho}; }
inline Region rlabel(uint32_t l) { return {true, l}; }

// ---------------------------------------------------------------- constraints

struct ConstraintSet {
  std::vector<std::pair<Type, Type>> type_incl;  // T <= T'
  std::vector<Type> type_cf;                     // T cf
  std::vector<Beh> beh_cf;                       // b cf
  std::map<uint32_t, std::vector<Beh>> bindings;  // b <= beta, grouped by beta
  std::vector<std::pair<Region, Region>> regions;  // r ~ r'
  std::map<std::string, Session> chan;            // c ~ eta
  std::map<std::string, Session> cochan;          // ~c ~ eta
  std::map<uint32_t, Session> choices;            // eta = psi(+) or eta = psi(Sigma), keyed by variable
  std::vector<std::pair<Session, Session>> duals;  // eta |><| eta'

  void add_incl(Type a, Type b);
  void add_binding(Beh b, uint32_t beta);
  void add_region(Region a, Region b);
  const std::vector<Beh>& bindings_of(uint32_t beta) const;
  size_t size() const;
};

std::string show(const Region& r);
std::vector<std::string> show_lines(const ConstraintSet& c);

// Equivalence closure of region equalities.
class RegionClosure {
 public:
  explicit RegionClosure(const ConstraintSet& c);
  bool same(Region a, Region b) const;
  // Source labels reachable from a region; more than one violates Region-Consistency.
  std::set<uint32_t> labels_of(Region r) const;
  std::optional<uint32_t> label_of(uint32_t rho) const;

 private:
  mutable std::map<Region, Region> parent_;
  std::map<Region, std::set<uint32_t>> labels_;
  Region find(Region r) const;
};

// Transitive, compatible closure of type inclusions, computed once on construction.
class TypeClosure {
 public:
  explicit TypeClosure(const ConstraintSet& c);
  bool derives(const Type& a, const Type& b) const;
  // Constructor clashes found while saturating; witnesses for Type-Consistent.
  const std::vector<std::pair<Type, Type>>& clashes() const { return clashes_; }
  // A base type reachable from t through inclusions in either direction, or failing that a
  // pair type from the same component.
  std::optional<Type> ground_of(const Type& t) const;
  // Direct upper bounds of t in the saturated closure.
  const std::vector<Type>& ups(const Type& t) const;

 private:
  std::unordered_map<Type, std::vector<Type>, TypeHash, TypeEq> up_;
  std::vector<std::pair<Type, Type>> clashes_;
  std::unordered_map<Type, Type, TypeHash, TypeEq> ground_;
  void saturate(std::vector<std::pair<Type, Type>> work);
  bool reach(const Type& a, const Type& b) const;
};

bool derives_behaviour(const ConstraintSet& c, const Beh& b, uint32_t beta);
bool derives_region(const ConstraintSet& c, Region a, Region b);
bool derives_type(const ConstraintSet& c, const Type& a, const Type& b);

struct Violation {
  std::string condition;  // Type-Consistent, Region-Consistent, Behaviour-Compact, Well-Confined
  std::string witness;
};
std::vector<Violation> well_formed(const ConstraintSet& c);

// Confinement closure seeded by cf constraints and the backward rules.
class Confinement {
 public:
  explicit Confinement(const ConstraintSet& c);
  bool type(const Type& t) const;
  bool behaviour(const Beh& b) const;
  std::vector<Violation> violations() const;

 private:
  const ConstraintSet& c_;
  std::unordered_map<Type, bool, TypeHash, TypeEq> types_;
  std::unordered_map<Beh, bool, BehHash, BehEq> behs_;
  std::set<uint32_t> betas_;
  bool beh_rec(const Beh& b, std::set<uint32_t>& visiting) const;
};

bool confined_type(const ConstraintSet& c, const Type& t);
bool confined_behaviour(const ConstraintSet& c, const Beh& b);

bool subtype(const ConstraintSet& c, const Type& a, const Type& b);
bool session_subtype(const ConstraintSet& c, const Session& a, const Session& b);
bool dual(const ConstraintSet& c, const Session& a, const Session& b);
// Mirror image: swaps ! and ?, internal and external choice (all labels active).
Session mirror(const Session& s);

// Checking-context variants that reuse precomputed closures.
struct Judge {
  explicit Judge(const ConstraintSet& c) : c(c), types(c), regions(c) {}
  const ConstraintSet& c;
  TypeClosure types;
  RegionClosure regions;
  bool subtype(const Type& a, const Type& b) const;
  bool session_subtype(const Session& a, const Session& b) const;
  bool dual(const Session& a, const Session& b) const;
};

// ---------------------------------------------------------------- schemas

struct TypeSchema {
  std::set<uint32_t> quantified;
  ConstraintSet bound;
  Type body;
};

struct Substitution {
  std::map<uint32_t, Type> alpha;
  std::map<uint32_t, uint32_t> beta, rho;
  std::map<uint32_t, Session> psi;
  Mapper mapper() const;
};

ConstraintSet apply(const ConstraintSet& c, const Mapper& m);
std::string show(const TypeSchema& s);

// Schema of a constant; label and channel are required exactly for request, accept and resume.
TypeSchema constant_schema(const Expr& k, Supply& supply, uint32_t channel_psi = 0);
bool solvable(const TypeSchema& ts, const ConstraintSet& c, const Substitution& s);

}  // namespace sessionml
