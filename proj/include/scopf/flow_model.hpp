#pragma once

#include "scopf/grid.hpp"

namespace scopf {

// Linear coefficients of a branch power flow over the lifted voltage
// variables of its bus pair:
//   flow = self * c_ii + cross * c_ij + skew * s_ij
// with c_ij = v_i v_j cos(th_i - th_j) and s_ij = v_i v_j sin(th_i - th_j)
// taken in the branch's origin->destination orientation ("self" multiplies
// the sending-end magnitude square).
struct LiftedFlow {
  double self = 0.0;
  double cross = 0.0;
  double skew = 0.0;
};

inline LiftedFlow line_p_origin(const Line& l) {
  return {l.g, -l.g, -l.b};
}
inline LiftedFlow line_q_origin(const Line& l) {
  return {-(l.b + l.bch / 2.0), l.b, -l.g};
}
inline LiftedFlow line_p_dest(const Line& l) {
  return {l.g, -l.g, l.b};
}
inline LiftedFlow line_q_dest(const Line& l) {
  return {-(l.b + l.bch / 2.0), l.b, l.g};
}

// Transformer with complex ratio t = tr + j ti, |t| = tm, magnetizing
// admittance on the internal node. The destination side sees the plain
// series admittance.
inline LiftedFlow xfmr_p_origin(const Transformer& t) {
  double tm2 = t.tm * t.tm;
  return {(t.g + t.gM) / tm2, (-t.g * t.tr + t.b * t.ti) / tm2,
          (-t.b * t.tr - t.g * t.ti) / tm2};
}
inline LiftedFlow xfmr_q_origin(const Transformer& t) {
  double tm2 = t.tm * t.tm;
  return {-(t.b + t.bM) / tm2, (t.b * t.tr + t.g * t.ti) / tm2,
          (-t.g * t.tr + t.b * t.ti) / tm2};
}
inline LiftedFlow xfmr_p_dest(const Transformer& t) {
  double tm2 = t.tm * t.tm;
  return {t.g, -(t.g * t.tr + t.b * t.ti) / tm2,
          -(t.g * t.ti - t.b * t.tr) / tm2};
}
inline LiftedFlow xfmr_q_dest(const Transformer& t) {
  double tm2 = t.tm * t.tm;
  return {-t.b, -(t.g * t.ti - t.b * t.tr) / tm2,
          (t.g * t.tr + t.b * t.ti) / tm2};
}

}  // namespace scopf
