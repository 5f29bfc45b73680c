// Wire types of the kospred inference service.

export interface ModelInfo {
  arch: string;
  validation_mae_idr: number;
  format_version: number;
}

export interface Metadata {
  cities: string[];
  areas_by_city: Record<string, string[]>;
  types: string[];
  facilities: string[];
  model: ModelInfo;
}

export interface PredictRequest {
  kota: string;
  area: string;
  type_kos: string;
  facilities: string[];
}

export interface PredictResponse {
  price_idr: number;
  raw_price: number;
  display_price: number;
  facility_score_used: number;
  unknown_facilities: string[];
  oov_fields: string[];
}

export interface HealthResponse {
  status: string;
  format_version: number;
}

export interface Selections {
  kota: string | null;
  area: string | null;
  typeKos: string | null;
  facilities: string[];
}

export interface Bookmark {
  selections: Selections;
  displayPrice: number;
  createdAt: string; // ISO timestamp
}
