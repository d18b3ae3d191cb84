// Wire types mirrored from the central service's /api/v1 responses.

export type LedColor = "Green" | "Yellow" | "Red";
export type StationStatus = "Empty" | "Full" | "Overflow" | "Indeterminate";
export type ComplaintState = "Submitted" | "Dispatched" | "Resolved" | "Acknowledged";
export type AlertKind = "Full" | "Overflow" | "HeatAnomaly" | "SlaBreach";

export interface StateEvent {
  seq: number;
  at: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface Snapshot<T> {
  seq: number;
  items: T[];
}

export interface BinSnapshot {
  bin_id: string;
  zone_id: string;
  lat: number;
  lon: number;
  fill_fraction: number;
  inner_temp_c: number;
  led: LedColor;
  battery_pct: number;
  last_report_seq: number;
  online: boolean;
}

export interface StationSnapshot {
  station_id: string;
  lat: number;
  lon: number;
  solar_light_on: boolean;
  status: StationStatus;
  last_observation_at: number | null;
}

export interface AlertSnapshot {
  alert_id: string;
  source_kind: string;
  source_id: string;
  kind: AlertKind;
  raised_at: number;
  cleared_at: number | null;
}

export interface ComplaintSnapshot {
  complaint_id: string;
  citizen_id: string;
  photo_ref: string;
  lat: number;
  lon: number;
  address_text: string;
  description: string;
  state: ComplaintState;
  submitted_at: number | null;
  dispatched_at: number | null;
  resolved_at: number | null;
  assigned_crew: string | null;
}

export interface CrewSnapshot {
  crew_id: string;
  smartphone: boolean;
}

export interface NotificationSnapshot {
  notification_id: string;
  channel: "Push" | "Sms";
  recipient: string;
  body: string;
  lat: number | null;
  lon: number | null;
  address_text: string | null;
  queued_at: number;
  delivered_at: number | null;
  transport: string;
  status: "Queued" | "Delivered";
  about_kind: string;
  about_id: string;
}

export interface ApiError {
  error: string;
  detail: string;
}
