/**
 * Wire types for the labeling service.
 *
 * These mirror the JSON payloads field for field. The UI renders what
 * the service sends and never derives its own metric values, so any
 * shape drift should surface here as a type error rather than as a
 * silently wrong chart.
 */

export type Label = 1 | -1;

/** sample_id -> label, exactly the user's choices for the pending display. */
export type Answers = Record<string, Label>;

export type StrategyName = "proposed" | "random" | "maxmin" | "uncertainty";

export interface DisplayItem {
  sample_id: string;
  ref_image: string | null;
  test_image: string | null;
  score: number | null;
}

export interface DisplayPayload {
  iteration: number;
  strategy: string;
  display_size: number;
  items: DisplayItem[];
}

export interface SessionCreated {
  session_id: string;
  iteration: number;
  display: string;
  display_size: number;
}

export interface LabelOutcome {
  iteration: number;
  finished: boolean;
  eer: number | null;
  sampling_rate_pct: number;
}

export interface IterationRecord {
  iteration: number;
  n_labeled: number;
  sampling_rate_pct: number;
  eer: number | null;
  fp_iterations: number | null;
  objective_final: number | null;
  strategy: string;
}

export interface MetricsPayload {
  session_finished: boolean;
  iteration: number;
  n_rounds: number;
  n_pool: number;
  strategy: string;
  records: IterationRecord[];
}

export interface DatasetRef {
  synthetic?: string;
  path?: string;
}

export interface CreateSessionRequest {
  dataset: DatasetRef;
  hp?: Record<string, number | boolean>;
  strategy?: StrategyName;
  seed?: number;
  with_eval?: boolean;
}

export interface ErrorBody {
  code: string;
  message: string;
  field: string | null;
}
