import { describe, expect, it } from "vitest";

import { DEFAULT_KNOBS, KNOB_BOUNDS, Knobs, knobsToOptions, optionsToKnobs, sanitizeKnobs } from "../src/knobs.js";

const SAMPLE_KNOBS: Knobs[] = [
  DEFAULT_KNOBS,
  {
    allowTransfers: true, maxTransfers: 32, robust: true, gamma1: 0.1, gamma2: 2,
    occupancyCap: 0.9, headroom: 2, unitOrder: true, seed: 7,
  },
  {
    allowTransfers: false, maxTransfers: null, robust: false, gamma1: 0, gamma2: null,
    occupancyCap: null, headroom: null, unitOrder: false, seed: 0,
  },
];

describe("knob <-> options mapping", () => {
  it("round-trips every knob state", () => {
    for (const knobs of SAMPLE_KNOBS) {
      const options = knobsToOptions(knobs);
      expect(optionsToKnobs(options)).toEqual(sanitizeKnobs(knobs));
    }
  });

  it("round-trips options originating from the server", () => {
    const serverOptions = {
      allow_transfers: true,
      robust: false,
      gamma1: 0.05,
      gamma2: null,
      occupancy_fraction_cap: 0.95,
      occupancy_headroom: null,
      enforce_unit_order: false,
      seed: 42,
      transfer_limits: { pair: {}, per_hospital: {}, total: 16 },
    };
    const knobs = optionsToKnobs(serverOptions);
    const back = knobsToOptions(knobs);
    expect(back.allow_transfers).toBe(true);
    expect(back.transfer_limits?.total).toBe(16);
    expect(back.occupancy_fraction_cap).toBe(0.95);
    expect(back.seed).toBe(42);
  });

  it("clamps out-of-range values so the API never sees a 422", () => {
    const wild = sanitizeKnobs({
      ...DEFAULT_KNOBS,
      gamma1: 99, gamma2: 0.2, occupancyCap: 1.7, headroom: -4, maxTransfers: 10_000, seed: -5,
    });
    expect(wild.gamma1).toBeLessThanOrEqual(KNOB_BOUNDS.gamma1.max);
    expect(wild.gamma2).toBeGreaterThanOrEqual(KNOB_BOUNDS.gamma2.min);
    expect(wild.occupancyCap).toBeLessThanOrEqual(1.0);
    expect(wild.headroom).toBeGreaterThanOrEqual(0);
    expect(wild.maxTransfers).toBeLessThanOrEqual(KNOB_BOUNDS.maxTransfers.max);
    expect(wild.seed).toBeGreaterThanOrEqual(0);
  });

  it("disabling transfers clears the budget override", () => {
    const options = knobsToOptions({ ...DEFAULT_KNOBS, allowTransfers: false, maxTransfers: 12 });
    expect(options.transfer_limits?.total).toBeNull();
  });
});
