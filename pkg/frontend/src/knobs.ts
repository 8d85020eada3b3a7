/**
 * Planner knobs: the slider/toggle values the UI exposes, mapped one-to-one
 * onto the solve-options overrides the API accepts. Client-side bounds match
 * the server's validation so a knob state never produces a 422.
 */

import { SolveOptionsWire } from "./types.js";

export interface Knobs {
  allowTransfers: boolean;
  maxTransfers: number | null;
  robust: boolean;
  gamma1: number;
  gamma2: number | null;
  occupancyCap: number | null;
  headroom: number | null;
  unitOrder: boolean;
  seed: number;
}

export const KNOB_BOUNDS = {
  maxTransfers: { min: 0, max: 500 },
  gamma1: { min: 0, max: 2 },
  gamma2: { min: 1, max: 10 },
  occupancyCap: { min: 0.5, max: 1.0 },
  headroom: { min: 0, max: 50 },
  seed: { min: 0, max: 2 ** 31 - 1 },
} as const;

export const DEFAULT_KNOBS: Knobs = {
  allowTransfers: false,
  maxTransfers: null,
  robust: false,
  gamma1: 0.05,
  gamma2: null,
  occupancyCap: 0.95,
  headroom: null,
  unitOrder: false,
  seed: 0,
};

function clamp(value: number, bounds: { min: number; max: number }): number {
  return Math.min(bounds.max, Math.max(bounds.min, value));
}

/** Validate and clamp a knob state into the representable range. */
export function sanitizeKnobs(knobs: Knobs): Knobs {
  return {
    ...knobs,
    maxTransfers: knobs.maxTransfers === null
      ? null
      : Math.round(clamp(knobs.maxTransfers, KNOB_BOUNDS.maxTransfers)),
    gamma1: clamp(knobs.gamma1, KNOB_BOUNDS.gamma1),
    gamma2: knobs.gamma2 === null ? null : clamp(knobs.gamma2, KNOB_BOUNDS.gamma2),
    occupancyCap: knobs.occupancyCap === null ? null : clamp(knobs.occupancyCap, KNOB_BOUNDS.occupancyCap),
    headroom: knobs.headroom === null ? null : clamp(knobs.headroom, KNOB_BOUNDS.headroom),
    seed: Math.round(clamp(knobs.seed, KNOB_BOUNDS.seed)),
  };
}

/** Knob state -> options overrides for POST /api/scenarios/{id}/solve. */
export function knobsToOptions(knobs: Knobs): Partial<SolveOptionsWire> {
  const k = sanitizeKnobs(knobs);
  return {
    allow_transfers: k.allowTransfers,
    robust: k.robust,
    gamma1: k.gamma1,
    gamma2: k.gamma2,
    occupancy_fraction_cap: k.occupancyCap,
    occupancy_headroom: k.headroom,
    enforce_unit_order: k.unitOrder,
    seed: k.seed,
    transfer_limits: {
      pair: {},
      per_hospital: {},
      total: k.allowTransfers ? k.maxTransfers : null,
    },
  };
}

/** Inverse mapping: recover knob state from stored scenario options. */
export function optionsToKnobs(options: Partial<SolveOptionsWire>): Knobs {
  return sanitizeKnobs({
    allowTransfers: options.allow_transfers ?? DEFAULT_KNOBS.allowTransfers,
    maxTransfers: options.transfer_limits?.total ?? null,
    robust: options.robust ?? DEFAULT_KNOBS.robust,
    gamma1: options.gamma1 ?? DEFAULT_KNOBS.gamma1,
    gamma2: options.gamma2 ?? null,
    occupancyCap: options.occupancy_fraction_cap ?? null,
    headroom: options.occupancy_headroom ?? null,
    unitOrder: options.enforce_unit_order ?? DEFAULT_KNOBS.unitOrder,
    seed: options.seed ?? 0,
  });
}
