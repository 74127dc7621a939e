/** Wire types mirroring the /v1 JSON API. */

export interface WorkloadRange {
  min_hours_per_week: number;
  max_hours_per_week: number;
}

export interface RatingAggregate {
  count: number;
  sum: number;
}

export interface ModuleMeta {
  id: string;
  title: string;
  previous: string[];
  next: string[];
  alternatives: string[];
  categories: string[];
  complexity: number;
  scale: "nano" | "micro" | "mini" | "macro";
  duration_minutes: number;
  workload: WorkloadRange;
  exercises: number;
  keywords: string[];
  languages: string[];
  rating: RatingAggregate;
  certificate: boolean;
  price: number;
  kind: "passive" | "active";
}

export interface TrackFinding {
  code: string;
  message: string;
  module?: string;
  prerequisite?: string;
  constraint?: string;
}

export interface CourseAggregate {
  total_minutes: number;
  workload_hours: { min: number; max: number };
  max_complexity: number;
  total_exercises: number;
  total_price: number;
  scale_histogram: Record<string, number>;
}

export interface WorkflowSummary {
  id: string;
  title: string;
  owning_module?: string;
  nodes: Array<{ id: string; tool: string }>;
  links: Array<{ from: { node: string; port: string }; to: { node: string; port: string } }>;
}

export interface NodeRun {
  status: string;
  resource: string | null;
  queued: [number, number] | null;
  started: [number, number] | null;
  finished: [number, number] | null;
  failure: string | null;
}

export interface ArtifactRef {
  id: string;
  kind: string;
  node: string;
  port: string;
  size: number;
}

export interface RunRecord {
  run_id: string;
  workflow_id: string;
  seed: number;
  status: "running" | "succeeded" | "failed" | "cancelled";
  nodes: Record<string, NodeRun>;
  artifacts: ArtifactRef[];
  error?: string | null;
}

export interface CatalogFilters {
  keyword?: string;
  category_prefix?: string;
  scale?: string;
  language?: string;
  max_complexity?: number;
}
