/** JSON shapes served by the survey HTTP API. */

export type QuestionType = "form" | "purchase";
export type Phase = "learning" | "validation";
export type Order = "form_first" | "purchase_first";

export type FormChoice =
  | "left_much_better"
  | "left_better"
  | "right_better"
  | "right_much_better";

export type PurchaseChoice = "left" | "right";

export type SessionStatus = "active" | "validating" | "finished";

export interface SessionInfo {
  session_id: string;
  respondent_index: number;
  eta: number;
  status: SessionStatus;
  rounds: number;
}

export interface Question {
  session_id: string;
  status: SessionStatus;
  phase: Phase;
  question_type: QuestionType;
  round: number;
  order: Order;
  form_pair: [string, string];
  question_number: number;
  mesh_urls: [string, string];
  choices: string[];
  /** 1-based (price, mpg) level indices, purchase questions only. */
  function_profiles?: [[number, number], [number, number]];
  /** Display strings for the two profiles, purchase questions only. */
  profile_labels?: [[string, string], [string, string]];
}

export interface AnswerAck {
  recorded: boolean;
  session_id: string;
  status: SessionStatus;
  round: number;
  learned: QuestionType;
  form_pairs: number;
  purchase_answers: number;
}

export interface MeshData {
  vertices: number[][];
  faces: number[][];
  patches: Array<Record<string, unknown>>;
}

export interface RespondentSummary {
  session_id: string;
  respondent_index: number;
  eta: number;
  form_hit_rate: number;
  overall_hit_rate: number;
}

export interface FinalizeReport {
  study_id: string;
  n_respondents: number;
  excluded_sessions: string[];
  form_hit_rate: number;
  overall_hit_rate: number;
  respondents: RespondentSummary[];
}
