// Service payload types, mirrored from the HTTP API's JSON documents.
// Every number the UI shows comes from one of these structures.

export type ColumnKind = 'numeric' | 'categorical';

export interface ColumnInfo {
  name: string;
  kind: ColumnKind;
  levels?: string[];
}

export interface ChartParamSpec {
  name: string;
  type: string;
  required: boolean;
  default: unknown;
  description: string;
}

export interface ChartDescriptor {
  kind: string;
  description: string;
  needs_instance: boolean;
  params: ChartParamSpec[];
}

export interface ServiceInfo {
  version: string;
  models: string[];
  task: string;
  target: string;
  n_rows: number;
  columns: ColumnInfo[];
  charts: ChartDescriptor[];
}

export interface ResultTable {
  columns: string[];
  values: unknown[][];
}

export interface Explanation {
  kind: string;
  model_label: string;
  result: ResultTable;
  chart: Record<string, unknown>;
  meta: Record<string, unknown>;
}

// Chart payload shapes per kind (the `chart` field of an Explanation).

export interface PerformanceChart {
  type: 'performance';
  task: string;
  metrics: { name: string; value: number }[];
}

export interface AttributionBar {
  variable: string;
  label: string;
  contribution: number;
  cumulative: number;
  sign: '+' | '-' | '0';
  samples?: number[];
}

export interface AttributionChart {
  type: 'breakdown' | 'shapley';
  intercept: number;
  prediction: number;
  bars: AttributionBar[];
}

export interface CpPanel {
  variable: string;
  kind: ColumnKind;
  x: (number | string)[];
  y: number[];
  anchor: { x: number | string; y: number };
}

export interface CpChart {
  type: 'cp_profile';
  panels: CpPanel[];
}

export interface ImportanceBar {
  variable: string;
  mean_loss: number;
  importance: number;
  dropout: number[];
}

export interface ImportanceChart {
  type: 'importance';
  loss: string;
  mode: string;
  full_model_loss: number;
  bars: ImportanceBar[];
  baseline: { mean_loss: number; importance: number; dropout: number[] };
}

export interface ProfilePanel {
  variable: string;
  x: (number | string)[];
  y?: number[];
  weights?: number[];
  curves?: { row_id: number; y: number[] }[];
  centered?: boolean;
}

export interface ProfileChart {
  type: 'profile';
  profile_kind: 'pdp' | 'ale' | 'ice';
  panels: ProfilePanel[];
}

export interface ResidualsChart {
  type: 'residuals';
  points: { row_id: number[]; y_hat: number[]; residual: number[] };
  histogram: { edges: number[]; counts: number[] };
}

export interface TreeNodeRecord {
  leaf_value?: number;
  n?: number;
  variable?: string;
  threshold?: number;
  levels?: string[];
  left?: TreeNodeRecord;
  right?: TreeNodeRecord;
}

export interface TreeChart {
  type: 'tree';
  max_depth: number;
  depth: number;
  fidelity: number;
  root: TreeNodeRecord;
}

export interface FairnessChart {
  type: 'fairness_check';
  privileged: string;
  epsilon: number;
  bounds: [number, number];
  verdict: string;
  metrics: {
    metric: string;
    points: { subgroup: string; value: number | null; ratio: number | null }[];
  }[];
  narrative: string[];
}

export interface StateChart {
  kind: string;
  models: string[];
  params: Record<string, unknown>;
}

export interface StateDoc {
  version: string;
  charts: StateChart[];
  observations: { row: number; overrides: Record<string, unknown> }[];
  layout: number[];
}

export interface FieldError {
  field: string;
  message: string;
}
