#pragma once

#include <string>

#include "sate/crossfit.hpp"
#include "sate/data.hpp"

namespace sate {

// Influence-function variants. PsiGeneral is the efficient score when the
// labelling propensity depends on (t, x, s); the setting kinds restrict the
// observation pattern (I/II: no surrogates in r and no mu~; III: r free of s;
// IV: fully labelled AIPW). PsiTildeLabelled is the labelled-only score with
// the density ratio lambda(x), and PsiPooledSurrogate is PsiGeneral with the
// outcome regression on (x, s) pooled across arms — the pooling lives in the
// fitted handle, the active slots always carry the unit's own arm.
enum class InfluenceKind {
  PsiGeneral,
  PsiSettingI,
  PsiSettingII,
  PsiSettingIII,
  PsiSettingIV,
  PsiTildeLabelled,
  PsiPooledSurrogate,
};

inline std::string to_string(InfluenceKind k) {
  switch (k) {
    case InfluenceKind::PsiGeneral: return "psi_general";
    case InfluenceKind::PsiSettingI: return "psi_setting_i";
    case InfluenceKind::PsiSettingII: return "psi_setting_ii";
    case InfluenceKind::PsiSettingIII: return "psi_setting_iii";
    case InfluenceKind::PsiSettingIV: return "psi_setting_iv";
    case InfluenceKind::PsiTildeLabelled: return "psi_tilde_labelled";
    case InfluenceKind::PsiPooledSurrogate: return "psi_pooled_surrogate";
  }
  throw ValidationError("influence: unknown kind");
}

// which nuisance handles a kind dereferences
struct NuisanceUse {
  bool e = false;
  bool r = false;
  bool mu_tilde = false;
  bool mu = false;
  bool lambda = false;
};

inline NuisanceUse nuisance_use(InfluenceKind k) {
  switch (k) {
    case InfluenceKind::PsiGeneral:
    case InfluenceKind::PsiSettingIII:
    case InfluenceKind::PsiPooledSurrogate: return {true, true, true, true, false};
    case InfluenceKind::PsiSettingI:
    case InfluenceKind::PsiSettingII: return {true, true, false, true, false};
    case InfluenceKind::PsiSettingIV: return {true, false, false, true, false};
    case InfluenceKind::PsiTildeLabelled: return {true, false, true, false, true};
  }
  throw ValidationError("influence: unknown kind");
}

namespace detail {

inline double require_y(const Observation& w) {
  if (!w.y) throw ValidationError("influence: labelled unit without outcome");
  return *w.y;
}

}  // namespace detail

// mu(1,x) - mu(0,x)
//   + t r / (e r(1,x,s)) (y - mu~(1,x,s)) - (1-t) r / ((1-e) r(0,x,s)) (y - mu~(0,x,s))
//   + t / e (mu~(1,x,s) - mu(1,x))        - (1-t) / (1-e) (mu~(0,x,s) - mu(0,x))
//   - delta
// Terms carrying the labelling indicator contribute zero for unlabelled
// units, and y is never dereferenced there.
inline double eval_psi_general(const Observation& w, double delta, const NuisanceHandles& eta) {
  const double e = eta.e(w.x);
  const double mu1 = eta.mu(1, w.x);
  const double mu0 = eta.mu(0, w.x);
  double v = mu1 - mu0 - delta;
  if (w.t == 1) {
    const double mt = eta.mu_tilde(1, w.x, w.s);
    v += (mt - mu1) / e;
    if (w.r == 1) v += (detail::require_y(w) - mt) / (e * eta.r(1, w.x, w.s));
  } else {
    const double mt = eta.mu_tilde(0, w.x, w.s);
    v -= (mt - mu0) / (1.0 - e);
    if (w.r == 1) v -= (detail::require_y(w) - mt) / ((1.0 - e) * eta.r(0, w.x, w.s));
  }
  return v;
}

inline double eval_psi_setting(InfluenceKind kind, const Observation& w, double delta,
                               const NuisanceHandles& eta) {
  switch (kind) {
    case InfluenceKind::PsiSettingI:
    case InfluenceKind::PsiSettingII: {
      // residuals against mu(t,x); the r handle must not depend on s here
      const double e = eta.e(w.x);
      const double mu1 = eta.mu(1, w.x);
      const double mu0 = eta.mu(0, w.x);
      double v = mu1 - mu0 - delta;
      if (w.r == 1) {
        const double y = detail::require_y(w);
        if (w.t == 1)
          v += (y - mu1) / (e * eta.r(1, w.x, w.s));
        else
          v -= (y - mu0) / ((1.0 - e) * eta.r(0, w.x, w.s));
      }
      return v;
    }
    case InfluenceKind::PsiSettingIII:
    case InfluenceKind::PsiGeneral:
    case InfluenceKind::PsiPooledSurrogate: return eval_psi_general(w, delta, eta);
    case InfluenceKind::PsiSettingIV: {
      // the fully-labelled AIPW score: every unit must carry an outcome
      const double e = eta.e(w.x);
      const double mu1 = eta.mu(1, w.x);
      const double mu0 = eta.mu(0, w.x);
      const double y = detail::require_y(w);
      double v = mu1 - mu0 - delta;
      if (w.t == 1)
        v += (y - mu1) / e;
      else
        v -= (y - mu0) / (1.0 - e);
      return v;
    }
    case InfluenceKind::PsiTildeLabelled:
      throw ValidationError("influence: psi_tilde has its own evaluator");
  }
  throw ValidationError("influence: unknown kind");
}

// t lambda(x) / e(x) (y - mu~(1,x,s)) - (1-t) lambda(x) / (1-e(x)) (y - mu~(0,x,s));
// defined conditionally on being labelled, and delta-free.
inline double eval_psi_tilde(const Observation& w, const NuisanceHandles& eta) {
  if (w.r != 1) throw ValidationError("influence: psi_tilde defined on labelled units");
  const double y = detail::require_y(w);
  const double lam = eta.lambda(w.x);
  const double e = eta.e(w.x);
  if (w.t == 1) return lam / e * (y - eta.mu_tilde(1, w.x, w.s));
  return -lam / (1.0 - e) * (y - eta.mu_tilde(0, w.x, w.s));
}

}  // namespace sate
