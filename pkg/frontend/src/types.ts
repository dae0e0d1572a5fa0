export interface Scene {
  parking_area: [number, number, number, number]; // xmin, ymin, xmax, ymax
  car_length: number;
  car_width: number;
  rear_overhang: number;
  wheel_base: number;
}

/** Pose components follow the dataset column order px, py, theta, v. */
export type Pose = [number, number, number, number];

export interface EllipsoidDoc {
  center: number[];
  sigma: number[][];
  radius: number;
}

export interface SessionCounts {
  accepted: number;
  rejected: number;
}

export interface RunReport {
  method: string;
  converged: boolean;
  iterations: number;
  final_cost: number;
  cost_history: number[];
  comparison_history?: number[];
  terminal_state: number[];
  terminal_mahalanobis?: number;
  trajectory: { states: number[][]; controls: number[][] };
}

export type RunState =
  | { status: 'running' }
  | { status: 'done'; report: RunReport }
  | { status: 'failed'; error: string };

export interface SessionView {
  counts: SessionCounts;
  pending: Pose | null;
  acceptedPoints: Pose[];
  ellipsoid: EllipsoidDoc | null;
  trajectory: number[][] | null;
  costHistory: number[] | null;
  message: string;
}

export const initialView = (): SessionView => ({
  counts: { accepted: 0, rejected: 0 },
  pending: null,
  acceptedPoints: [],
  ellipsoid: null,
  trajectory: null,
  costHistory: null,
  message: 'fetch a candidate to begin',
});
