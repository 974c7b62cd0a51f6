// Wire shapes of the review API this console consumes.

export type VerdictValue = 'confirmed_malicious' | 'rejected' | 'unsure';

export interface StoredVerdict {
  repo_id: string;
  analyst: string;
  verdict: VerdictValue;
  noted_at: string;
}

export interface QueueItem {
  repo_id: string;
  full_name: string;
  title: string;
  description: string;
  readme: string;
  readme_truncated: boolean;
  labels: string[];
  family: string | null;
  verdict: StoredVerdict | null;
}

export interface QueueResponse {
  items: QueueItem[];
  total: number;
}

export interface PrecisionReport {
  precision: number;
  confirmed: number;
  rejected: number;
  unsure: number;
  decisive: number;
  total: number;
}

export interface VerdictResponse extends StoredVerdict {
  status: 'accepted' | 'replaced';
}
