// Pure projection of (snapshot seq + event stream) into the dashboard model.
//
// Nothing here talks to the network or mutates optimistically: the only way
// the model changes is loadSnapshots() or applyEvent(), and replaying the
// same inputs always yields the same model. Events at or below the current
// seq are ignored, which is what makes stream resume idempotent.

import type {
  AlertKind,
  AlertSnapshot,
  BinSnapshot,
  ComplaintSnapshot,
  ComplaintState,
  CrewSnapshot,
  LedColor,
  NotificationSnapshot,
  Snapshot,
  StateEvent,
  StationSnapshot,
  StationStatus,
} from "./types.js";

export interface BinRow {
  binId: string;
  zoneId: string;
  fill: number;
  led: LedColor;
  lastReportAt: number | null;
  online: boolean;
  batteryPct: number;
}

export interface StationRow {
  stationId: string;
  status: StationStatus;
  lastObservationAt: number | null;
}

export interface AlertRow {
  alertId: string;
  kind: AlertKind;
  sourceKind: string;
  sourceId: string;
  raisedAt: number;
  cleared: boolean;
  addressText: string | null;
}

export interface ComplaintCard {
  complaintId: string;
  citizenId: string;
  state: ComplaintState;
  description: string;
  addressText: string;
  assignedCrew: string | null;
  submittedAt: number | null;
  overdue: boolean;
}

export interface CrewRow {
  crewId: string;
  busy: boolean;
}

export interface FeedbackNote {
  complaintId: string;
  recipient: string;
  body: string;
  deliveredAt: number | null;
}

export const KANBAN_COLUMNS: ComplaintState[] = [
  "Submitted",
  "Dispatched",
  "Resolved",
  "Acknowledged",
];

interface Thresholds {
  yellow_at: number;
  red_at: number;
}

function ledFor(fill: number, t: Thresholds): LedColor {
  if (fill >= t.red_at) return "Red";
  if (fill > t.yellow_at) return "Yellow";
  return "Green";
}

export class CityStore {
  seq = 0;
  bins = new Map<string, BinRow>();
  stations = new Map<string, StationRow>();
  alerts: AlertRow[] = []; // newest first
  complaints = new Map<string, ComplaintCard>();
  crews = new Map<string, CrewRow>();
  feedback: FeedbackNote[] = [];
  private thresholds: Thresholds = { yellow_at: 0.5, red_at: 0.9 };
  private pendingFeedbackBodies = new Map<string, { complaintId: string; recipient: string; body: string }>();

  loadSnapshots(data: {
    bins: Snapshot<BinSnapshot>;
    stations: Snapshot<StationSnapshot>;
    alerts: Snapshot<AlertSnapshot>;
    complaints: Snapshot<ComplaintSnapshot>;
    crews: Snapshot<CrewSnapshot>;
    notifications?: Snapshot<NotificationSnapshot>;
  }): void {
    this.bins.clear();
    for (const b of data.bins.items) {
      this.bins.set(b.bin_id, {
        binId: b.bin_id,
        zoneId: b.zone_id,
        fill: b.fill_fraction,
        led: b.led,
        lastReportAt: null,
        online: b.online,
        batteryPct: b.battery_pct,
      });
    }
    this.stations.clear();
    for (const s of data.stations.items) {
      this.stations.set(s.station_id, {
        stationId: s.station_id,
        status: s.status,
        lastObservationAt: s.last_observation_at,
      });
    }
    this.alerts = data.alerts.items
      .map((a) => ({
        alertId: a.alert_id,
        kind: a.kind,
        sourceKind: a.source_kind,
        sourceId: a.source_id,
        raisedAt: a.raised_at,
        cleared: a.cleared_at !== null,
        addressText: null,
      }))
      .sort((x, y) => y.raisedAt - x.raisedAt || (y.alertId < x.alertId ? -1 : 1));
    this.complaints.clear();
    const breached = new Set(
      data.alerts.items
        .filter((a) => a.kind === "SlaBreach" && a.source_kind === "complaint")
        .map((a) => a.source_id),
    );
    for (const c of data.complaints.items) {
      this.complaints.set(c.complaint_id, {
        complaintId: c.complaint_id,
        citizenId: c.citizen_id,
        state: c.state,
        description: c.description,
        addressText: c.address_text,
        assignedCrew: c.assigned_crew,
        submittedAt: c.submitted_at,
        overdue: breached.has(c.complaint_id),
      });
    }
    this.crews.clear();
    for (const crew of data.crews.items) {
      this.crews.set(crew.crew_id, { crewId: crew.crew_id, busy: false });
    }
    for (const c of this.complaints.values()) {
      if (c.state === "Dispatched" && c.assignedCrew && this.crews.has(c.assignedCrew)) {
        this.crews.get(c.assignedCrew)!.busy = true;
      }
    }
    this.feedback = [];
    for (const n of data.notifications?.items ?? []) {
      if (n.about_kind === "complaint-resolution" && n.status === "Delivered") {
        this.feedback.push({
          complaintId: n.about_id,
          recipient: n.recipient,
          body: n.body,
          deliveredAt: n.delivered_at,
        });
      }
    }
    // every row is traceable to this snapshot seq
    this.seq = Math.max(
      data.bins.seq, data.stations.seq, data.alerts.seq,
      data.complaints.seq, data.crews.seq, data.notifications?.seq ?? 0,
    );
  }

  /** Apply one stream event; returns false for stale (already-seen) seqs. */
  applyEvent(e: StateEvent): boolean {
    if (e.seq <= this.seq) return false;
    this.seq = e.seq;
    const p = e.payload as Record<string, any>;
    switch (e.kind) {
      case "thresholds_set":
        this.thresholds = {
          yellow_at: p.thresholds.yellow_at,
          red_at: p.thresholds.red_at,
        };
        break;
      case "bin_registered":
        this.bins.set(p.bin_id, {
          binId: p.bin_id,
          zoneId: p.zone_id,
          fill: 0,
          led: "Green",
          lastReportAt: null,
          online: true,
          batteryPct: 100,
        });
        break;
      case "station_registered":
        this.stations.set(p.station_id, {
          stationId: p.station_id,
          status: "Empty",
          lastObservationAt: null,
        });
        break;
      case "crew_registered":
        this.crews.set(p.crew_id, { crewId: p.crew_id, busy: false });
        break;
      case "reading_accepted": {
        const bin = this.bins.get(p.bin_id);
        if (bin) {
          bin.fill = p.fill;
          bin.led = ledFor(p.fill, this.thresholds);
          bin.lastReportAt = e.at;
          bin.online = true;
          bin.batteryPct = p.battery_pct;
        }
        break;
      }
      case "bin_offline": {
        const bin = this.bins.get(p.bin_id);
        if (bin) bin.online = false;
        break;
      }
      case "station_observed": {
        const station = this.stations.get(p.station_id);
        if (station) {
          station.lastObservationAt = e.at;
          if (p.status !== "Indeterminate") station.status = p.status;
        }
        break;
      }
      case "alert_raised": {
        this.alerts.unshift({
          alertId: p.alert_id,
          kind: p.kind,
          sourceKind: p.source_kind,
          sourceId: p.source_id,
          raisedAt: e.at,
          cleared: false,
          addressText: p.address_text ?? null,
        });
        if (p.kind === "SlaBreach" && p.source_kind === "complaint") {
          const card = this.complaints.get(p.source_id);
          if (card) card.overdue = true;
        }
        break;
      }
      case "alert_cleared": {
        const alert = this.alerts.find((a) => a.alertId === p.alert_id);
        if (alert) alert.cleared = true;
        break;
      }
      case "complaint_submitted":
        this.complaints.set(p.complaint_id, {
          complaintId: p.complaint_id,
          citizenId: p.citizen_id,
          state: "Submitted",
          description: p.description,
          addressText: p.address_text,
          assignedCrew: null,
          submittedAt: e.at,
          overdue: false,
        });
        break;
      case "complaint_dispatched": {
        const card = this.complaints.get(p.complaint_id);
        if (card) {
          card.state = "Dispatched";
          card.assignedCrew = p.crew_id;
          const crew = this.crews.get(p.crew_id);
          if (crew) crew.busy = true;
        }
        break;
      }
      case "complaint_resolved": {
        const card = this.complaints.get(p.complaint_id);
        if (card) {
          card.state = "Resolved";
          card.overdue = false;
          if (card.assignedCrew) {
            const crew = this.crews.get(card.assignedCrew);
            if (crew) crew.busy = false;
          }
        }
        break;
      }
      case "complaint_acknowledged": {
        const card = this.complaints.get(p.complaint_id);
        if (card) card.state = "Acknowledged";
        break;
      }
      case "notification_queued":
        if (p.about_kind === "complaint-resolution") {
          this.pendingFeedbackBodies.set(p.notification_id, {
            complaintId: p.about_id,
            recipient: p.recipient,
            body: p.body,
          });
        }
        break;
      case "notification_delivered": {
        const pending = this.pendingFeedbackBodies.get(p.notification_id);
        if (pending) {
          this.pendingFeedbackBodies.delete(p.notification_id);
          this.feedback.push({ ...pending, deliveredAt: e.at });
        }
        break;
      }
      default:
        break; // audit-only kinds (batch_ingested, citizen_registered, ...)
    }
    return true;
  }

  kanban(): Record<ComplaintState, ComplaintCard[]> {
    const columns: Record<ComplaintState, ComplaintCard[]> = {
      Submitted: [],
      Dispatched: [],
      Resolved: [],
      Acknowledged: [],
    };
    const cards = [...this.complaints.values()].sort((a, b) =>
      a.complaintId < b.complaintId ? -1 : 1,
    );
    for (const card of cards) columns[card.state].push(card);
    return columns;
  }

  binRows(): BinRow[] {
    return [...this.bins.values()].sort((a, b) => (a.binId < b.binId ? -1 : 1));
  }

  stationRows(): StationRow[] {
    return [...this.stations.values()].sort((a, b) => (a.stationId < b.stationId ? -1 : 1));
  }

  crewRows(): CrewRow[] {
    return [...this.crews.values()].sort((a, b) => (a.crewId < b.crewId ? -1 : 1));
  }

  feedbackFor(complaintId: string): FeedbackNote | undefined {
    return this.feedback.find((f) => f.complaintId === complaintId);
  }
}
