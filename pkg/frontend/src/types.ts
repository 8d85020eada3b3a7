/** Wire types mirroring the planning service's JSON payloads. */

export interface TransferLimitsWire {
  pair: Record<string, Record<string, number>>;
  per_hospital: Record<string, number>;
  total: number | null;
}

export interface SolveOptionsWire {
  allow_transfers: boolean;
  robust: boolean;
  gamma1: number;
  gamma2: number | null;
  interval_level: number;
  occupancy_fraction_cap: number | null;
  occupancy_headroom: number | null;
  enforce_unit_order: boolean;
  w1: unknown;
  w4: unknown;
  transfer_limits: TransferLimitsWire;
  initial_unit_state: Record<string, boolean>;
  time_limit_seconds: number | null;
  solver_backend: string | null;
  seed: number;
}

export interface JobState {
  job_id: string;
  kind: string;
  state: "queued" | "running" | "done" | "failed";
  progress: number;
  run_id: string | null;
  error_code: string | null;
  error: string | null;
}

export interface PlanMetrics {
  bed_days: number;
  surge_bed_days: number;
  transfers_used: number;
  per_hospital: Record<string, Record<string, number>>;
}

export interface PlanWire {
  status: string;
  objective: number;
  objective_breakdown: Record<string, number>;
  robust: boolean;
  allow_transfers: boolean;
  horizon: number;
  hospitals: string[];
  allocations: Record<string, number[]>;
  capacity: Record<string, number[]>;
  demand_bound: Record<string, number[]>;
  transfers: { from: string; to: string; day: number; count: number }[];
  metrics: PlanMetrics;
}

export interface RunDocument {
  kind: string;
  provenance: Record<string, unknown>;
  plan: PlanWire;
  plots?: Record<string, ChartPayload>;
  pareto?: ParetoPayload;
  comparison?: StrategyPayload;
}

export interface OccupancyPayload {
  chart: "occupancy_vs_baseline";
  days: number[];
  series: Record<string, number[]>;
  reference_line: number;
}

export interface RequiredCapacityPayload {
  chart: "required_capacity";
  days: number[];
  hospitals: Record<string, {
    capacity: number[];
    demand: number[];
    required: number[];
    cap_binding_days: number[];
  }>;
}

export interface GanttPayload {
  chart: "unit_allocation_gantt";
  horizon: number;
  rows: {
    unit: string;
    hospital: string;
    beds: number;
    surge_level: string;
    priority_rank: number;
    active_spans: [number, number][];
  }[];
}

export interface StrategyPayload {
  chart: "strategy_comparison";
  strategies: {
    strategy: string;
    bed_days: number;
    surge_bed_days: number;
    objective: number | null;
    status: string;
    error: string | null;
  }[];
}

export interface ParetoPayload {
  chart: "transfer_pareto";
  points: {
    max_transfers: number;
    surge_bed_days: number;
    transfers_used: number;
    objective: number | null;
    status: string;
  }[];
  zero_surge_transfers: number | null;
}

export interface TimelinePayload {
  chart: "surge_timeline";
  days: number[];
  hospitals: Record<string, string[]>;
}

export type ChartPayload =
  | OccupancyPayload
  | RequiredCapacityPayload
  | GanttPayload
  | StrategyPayload
  | ParetoPayload
  | TimelinePayload;
