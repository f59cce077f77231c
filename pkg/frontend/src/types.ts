/** Payload shapes mirroring the annotation service's JSON responses. */

export interface OpHint {
  formula: string;
  args: string;
  explanation: string;
}

export interface OperationSpec {
  name: string;
  arity: number;
  category: string;
  commutative: boolean;
  hint: OpHint;
}

export interface RegistryPayload {
  operations: OperationSpec[];
  constants: { name: string; value: number }[];
}

export interface ValidArg {
  ref: string;
  value: number;
}

export interface HistoryStep {
  op: string;
  args: string[];
  value: number;
}

export interface SessionPayload {
  session_id: string;
  problem_id: string;
  annotator_id: string;
  problem: string;
  options: string[];
  category: string;
  palette: string[];
  status: string;
  valid_args: ValidArg[];
  history: HistoryStep[];
}

export interface SubmitVerdict {
  session_id: string;
  accepted: boolean;
  reason: string | null;
  final: number;
  target: number | null;
  task_id?: string;
}

export interface TaskStep {
  op: string;
  args: string[];
  value: number;
}

export interface TaskPayload {
  task_id: string;
  problem_id: string;
  problem: string;
  options: string[];
  correct: string;
  program: string;
  steps: TaskStep[];
  votes: number;
  resolution: string;
}

export interface ProblemPayload {
  id: string;
  problem: string;
  options: string[];
  correct: string;
  category: string;
  validated_program: string | null;
}
