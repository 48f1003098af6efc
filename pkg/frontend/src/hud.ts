/** HUD formatting: displayed values are the latest server values verbatim,
 * only formatted (two decimals for indices, percent for probabilities). */

import { EndMsg, StateMsg } from "./protocol.js";

export interface HudValues {
  io: string;
  itsi: string;
  sNorm: string;
  pLeftProceed: string;
  pStraightProceed: string;
  pLeftBarPercent: number;
  pStraightBarPercent: number;
  decision: string;
  category: string;
  time: string;
}

export function formatHud(state: StateMsg): HudValues {
  return {
    io: state.io.toFixed(2),
    itsi: state.itsi.toFixed(2),
    sNorm: state.s_norm.toFixed(2),
    pLeftProceed: `${Math.round(state.p_l[0] * 100)}%`,
    pStraightProceed: `${Math.round(state.p_s[0] * 100)}%`,
    pLeftBarPercent: state.p_l[0] * 100,
    pStraightBarPercent: state.p_s[0] * 100,
    decision: state.av_decision,
    category: state.expert_category,
    time: `${state.t.toFixed(1)} s`,
  };
}

export interface SummaryLine {
  label: string;
  value: string;
}

export function formatSummary(end: EndMsg): SummaryLine[] {
  const m = end.metrics;
  const seconds = (v: number | null) => (v === null ? "n/a" : `${v.toFixed(2)} s`);
  const lines: SummaryLine[] = [
    { label: "outcome", value: end.reason },
    { label: "AV transit", value: seconds(m.transit_av) },
    { label: "HV transit", value: seconds(m.transit_hv) },
    { label: "combined", value: seconds(m.combined) },
    { label: "PET", value: m.collision ? "collision" : seconds(m.pet) },
  ];
  if (m.decision_consistency !== null) {
    lines.push({
      label: "decision consistency",
      value: m.decision_consistency ? "yes" : "no",
    });
  }
  return lines;
}
