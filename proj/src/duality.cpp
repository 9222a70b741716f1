#include "sessionml/duality.hpp"

#include <deque>
#include <random>
#include <regex>

namespace sessionml {

namespace {

bool is_internal(const Session& s) { return s->tag == SesTag::IVar || s->tag == SesTag::Internal; }
bool is_external(const Session& s) { return s->tag == SesTag::EVar || s->tag == SesTag::External; }

struct Item {
  Session a, b;
  std::string channel;
};

}  // namespace

std::vector<std::pair<Session, Session>> expand(SessionStore& st, const Session& var, const Session& other0) {
  Session other = st.resolve(other0);
  std::vector<std::pair<Session, Session>> out;
  auto fresh_type = [&] { return t_var(st.supply.fresh()); };
  switch (other->tag) {
    case SesTag::End: st.bind(var->id, s_end()); break;
    case SesTag::In: {
      Type a = fresh_type();
      Session k = st.fresh_var();
      st.bind(var->id, s_out(a, k));
      st.c.add_incl(a, other->payload);
      out.emplace_back(k, other->next);
      break;
    }
    case SesTag::Out: {
      Type a = fresh_type();
      Session k = st.fresh_var();
      st.bind(var->id, s_in(a, k));
      st.c.add_incl(other->payload, a);
      out.emplace_back(k, other->next);
      break;
    }
    case SesTag::Deleg: {
      Session r = st.fresh_var(), k = st.fresh_var();
      st.bind(var->id, s_resume(r, k));
      st.sub(other->carried, r);
      out.emplace_back(k, other->next);
      break;
    }
    case SesTag::Resume: {
      Session d = st.fresh_var(), k = st.fresh_var();
      st.bind(var->id, s_deleg(d, k));
      st.sub(d, other->carried);
      out.emplace_back(k, other->next);
      break;
    }
    case SesTag::Internal: case SesTag::IVar: {
      Session view = other->tag == SesTag::IVar ? st.c.choices.at(other->id) : other;
      std::map<std::string, Session> br;
      std::set<std::string> act;
      for (auto& [k, v] : view->branches) {
        br[k] = st.fresh_var();
        act.insert(k);
        out.emplace_back(br[k], v);
      }
      Session reg = st.new_register(s_external(act, br));
      st.flexible.insert(reg->id);
      st.bind(var->id, reg);
      break;
    }
    case SesTag::External: case SesTag::EVar: {
      Session view = other->tag == SesTag::EVar ? st.c.choices.at(other->id) : other;
      std::map<std::string, Session> br;
      for (auto& k : view->active) {
        br[k] = st.fresh_var();
        out.emplace_back(br[k], view->branches.at(k));
      }
      Session reg = st.new_register(s_internal(br));
      st.flexible.insert(reg->id);
      st.bind(var->id, reg);
      break;
    }
    default: break;
  }
  return out;
}

DResult algD(SessionStore& st, std::optional<uint64_t> seed) {
  DResult result;
  std::deque<Item> work;
  std::vector<Item> residual;
  for (auto& [ch, s] : st.c.chan) {
    auto it = st.c.cochan.find(ch);
    Session other = it != st.c.cochan.end() ? it->second : st.fresh_var();
    if (it == st.c.cochan.end()) st.c.cochan[ch] = other;
    work.push_back({s, other, ch});
  }
  for (auto& [ch, s] : st.c.cochan)
    if (!st.c.chan.count(ch)) {
      Session other = st.fresh_var();
      st.c.chan[ch] = other;
      work.push_back({other, s, ch});
    }
  for (auto& [ch, s] : st.c.chan) result.channels.push_back({ch, s, st.c.cochan.at(ch)});

  std::mt19937_64 rng(seed.value_or(0));
  auto fail = [&](const Item& it, const std::string& why) -> DualityFailure {
    return DualityFailure(it.channel, "channel " + it.channel + ": " + show(st.full(it.a)) + " is not dual to " +
                                          show(st.full(it.b)) + (why.empty() ? "" : " (" + why + ")"));
  };

  while (true) {
    while (!work.empty()) {
      size_t pick = 0;
      if (seed) pick = std::uniform_int_distribution<size_t>(0, work.size() - 1)(rng);
      Item it = work[pick];
      work.erase(work.begin() + static_cast<std::ptrdiff_t>(pick));
      ++result.rule_applications;
      Session a = st.resolve(it.a), b = st.resolve(it.b);
      auto push = [&](Session x, Session y) { work.push_back({x, y, it.channel}); };
      try {
        if (a->tag == SesTag::Var && b->tag == SesTag::Var) {
          residual.push_back({a, b, it.channel});
          continue;
        }
        if (a->tag == SesTag::Var) {
          for (auto& [x, y] : expand(st, a, b)) push(x, y);
          continue;
        }
        if (b->tag == SesTag::Var) {
          for (auto& [y, x] : expand(st, b, a)) push(x, y);
          continue;
        }
        if (is_internal(b) && is_external(a)) std::swap(a, b);
        if (is_internal(a) && is_external(b)) {
          bool flex_a = a->tag == SesTag::IVar && st.flexible.count(a->id);
          bool flex_b = b->tag == SesTag::EVar && st.flexible.count(b->id);
          Session va = a->tag == SesTag::IVar ? st.c.choices.at(a->id) : a;
          Session vb = b->tag == SesTag::EVar ? st.c.choices.at(b->id) : b;
          if (flex_a) {
            std::map<std::string, Session> br;
            for (auto& [k, v] : va->branches)
              if (vb->active.count(k) || flex_b) br[k] = v;
            if (br.empty()) throw fail(it, "no common label");
            va = s_internal(br);
            st.c.choices[a->id] = va;
          }
          if (flex_b) {
            auto act = vb->active;
            auto br = vb->branches;
            for (auto& [k, v] : va->branches) {
              act.insert(k);
              if (!br.count(k)) br[k] = st.fresh_var();
            }
            vb = s_external(act, br);
            st.c.choices[b->id] = vb;
          }
          for (auto& [k, v] : va->branches) {
            if (!vb->active.count(k)) throw fail(it, "label " + k + " may be selected but is not always offered");
            push(v, vb->branches.at(k));
          }
          continue;
        }
        if (a->tag == SesTag::End && b->tag == SesTag::End) continue;
        if (a->tag == SesTag::In && b->tag == SesTag::Out) std::swap(a, b);
        if (a->tag == SesTag::Out && b->tag == SesTag::In) {
          st.c.add_incl(a->payload, b->payload);
          push(a->next, b->next);
          continue;
        }
        if (a->tag == SesTag::Resume && b->tag == SesTag::Deleg) std::swap(a, b);
        if (a->tag == SesTag::Deleg && b->tag == SesTag::Resume) {
          st.sub(a->carried, b->carried);
          push(a->next, b->next);
          continue;
        }
        throw fail(it, "");
      } catch (const InferenceFailure& e) {
        throw fail(it, e.what());
      }
    }
    // Residual variable pairs may have been instantiated meanwhile.
    bool moved = false;
    std::vector<Item> keep;
    for (auto& r : residual) {
      if (st.resolve(r.a)->tag != SesTag::Var || st.resolve(r.b)->tag != SesTag::Var) {
        work.push_back(r);
        moved = true;
      } else {
        keep.push_back(r);
      }
    }
    residual = keep;
    if (!moved) break;
  }
  // Remaining variable pairs are closed.
  for (auto& r : residual) {
    Session a = st.resolve(r.a), b = st.resolve(r.b);
    if (a->tag == SesTag::Var) st.bind(a->id, s_end());
    b = st.resolve(b);
    if (b->tag == SesTag::Var) st.bind(b->id, s_end());
  }
  for (auto& ch : result.channels) {
    ch.request = st.full(ch.request);
    ch.accept = st.full(ch.accept);
  }
  return result;
}

Session ground_payloads(const Session& s, const ConstraintSet& c) {
  TypeClosure tc(c);
  int depth = 0;
  std::function<Type(const Type&)> gt = [&](const Type& t) -> Type {
    if (depth > 32) return t;
    ++depth;
    Type out = t;
    if (t->tag == TypeTag::Var) {
      if (auto g = tc.ground_of(t)) out = (*g)->tag == TypeTag::Pair ? gt(*g) : *g;
    } else if (t->tag == TypeTag::Pair) {
      out = t_pair(gt(t->a), gt(t->b));
    }
    --depth;
    return out;
  };
  std::function<Session(const Session&)> go = [&](const Session& x) -> Session {
    switch (x->tag) {
      case SesTag::Out: return s_out(gt(x->payload), go(x->next));
      case SesTag::In: return s_in(gt(x->payload), go(x->next));
      case SesTag::Deleg: return s_deleg(go(x->carried), go(x->next));
      case SesTag::Resume: return s_resume(go(x->carried), go(x->next));
      case SesTag::Internal: {
        std::map<std::string, Session> br;
        for (auto& [k, v] : x->branches) br[k] = go(v);
        return s_internal(br);
      }
      case SesTag::External: {
        std::map<std::string, Session> br;
        for (auto& [k, v] : x->branches) br[k] = go(v);
        return s_external(x->active, br);
      }
      default: return x;
    }
  };
  return go(s);
}

std::string canonical(const std::vector<Session>& sessions) {
  std::string text;
  for (auto& s : sessions) text += show(s) + "\n";
  static const std::regex var(R"(('a|\bpsi[+&]?|\bb|\br)(\d+)\b)");
  std::map<std::string, std::string> names;
  std::string out;
  auto begin = std::sregex_iterator(text.begin(), text.end(), var);
  size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    out += text.substr(last, static_cast<size_t>(it->position()) - last);
    std::string key = it->str();
    auto found = names.find(key);
    if (found == names.end()) found = names.emplace(key, (*it)[1].str() + std::to_string(names.size() + 1)).first;
    out += found->second;
    last = static_cast<size_t>(it->position() + it->length());
  }
  out += text.substr(last);
  return out;
}

}  // namespace sessionml
