// Operator dashboard: bins, stations, live alert feed, complaint kanban, crews.

import { getJson, postJson, ApiCallError, EventStream } from "./api.js";
import { ageText, fillPercent, ledBadgeClass } from "./format.js";
import { CityStore, KANBAN_COLUMNS } from "./store.js";
import type {
  AlertSnapshot,
  BinSnapshot,
  ComplaintSnapshot,
  CrewSnapshot,
  NotificationSnapshot,
  Snapshot,
  StationSnapshot,
} from "./types.js";

export async function mountOps(root: HTMLElement): Promise<void> {
  const store = new CityStore();
  root.innerHTML = `
    <div id="banner" class="banner hidden">stream disconnected, reconnecting…</div>
    <header><h1>civicbin ops</h1><span id="seq" class="muted"></span></header>
    <main class="grid">
      <section class="panel"><h2>Bins</h2><div id="bins"></div></section>
      <section class="panel"><h2>Stations</h2><div id="stations"></div>
        <h2>Crews</h2><div id="crews"></div></section>
      <section class="panel"><h2>Alerts</h2><div id="alerts" class="feed"></div></section>
      <section class="panel wide"><h2>Complaints</h2><div id="kanban" class="kanban"></div></section>
    </main>
    <div id="toast" class="toast hidden"></div>`;

  const [bins, stations, alerts, complaints, crews, notifications] = await Promise.all([
    getJson<Snapshot<BinSnapshot>>("/api/v1/bins"),
    getJson<Snapshot<StationSnapshot>>("/api/v1/stations"),
    getJson<Snapshot<AlertSnapshot>>("/api/v1/alerts"),
    getJson<Snapshot<ComplaintSnapshot>>("/api/v1/complaints"),
    getJson<Snapshot<CrewSnapshot>>("/api/v1/crews"),
    getJson<Snapshot<NotificationSnapshot>>("/api/v1/notifications"),
  ]);
  store.loadSnapshots({ bins, stations, alerts, complaints, crews, notifications });
  render(root, store);

  const stream = new EventStream({
    onEvent: (event) => {
      if (store.applyEvent(event)) render(root, store);
    },
    onStatus: (connected) => {
      root.querySelector("#banner")!.classList.toggle("hidden", connected);
    },
  });
  stream.start(store.seq);

  root.querySelector("#kanban")!.addEventListener("click", async (raw) => {
    const target = raw.target as HTMLElement;
    const complaintId = target.dataset.dispatch;
    if (!complaintId) return;
    const crewSelect = root.querySelector<HTMLSelectElement>(
      `select[data-crew-for="${complaintId}"]`,
    );
    try {
      await postJson(`/api/v1/complaints/${complaintId}/dispatch`, {
        crew_id: crewSelect?.value ?? "",
      });
      // no optimistic update: the kanban moves when the event arrives
    } catch (err) {
      if (err instanceof ApiCallError) toast(root, `${err.body.error}: ${err.body.detail}`);
      else toast(root, String(err));
    }
  });
}

function render(root: HTMLElement, store: CityStore): void {
  const now = Date.now();
  root.querySelector("#seq")!.textContent = `seq ${store.seq}`;

  root.querySelector("#bins")!.innerHTML = `
    <table><thead><tr><th>bin</th><th>fill</th><th>LED</th><th>last report</th></tr></thead>
    <tbody>${store
      .binRows()
      .map(
        (b) => `<tr class="${b.online ? "" : "offline"}">
          <td>${b.binId}</td>
          <td>${fillPercent(b.fill)}</td>
          <td><span class="badge ${ledBadgeClass(b.led)}">${b.led}</span></td>
          <td>${b.online ? ageText(now, b.lastReportAt) : "offline"}</td>
        </tr>`,
      )
      .join("")}</tbody></table>`;

  root.querySelector("#stations")!.innerHTML = `
    <table><thead><tr><th>station</th><th>status</th><th>observed</th></tr></thead>
    <tbody>${store
      .stationRows()
      .map(
        (s) => `<tr><td>${s.stationId}</td>
          <td><span class="badge status-${s.status.toLowerCase()}">${s.status}</span></td>
          <td>${ageText(now, s.lastObservationAt)}</td></tr>`,
      )
      .join("")}</tbody></table>`;

  root.querySelector("#crews")!.innerHTML = store
    .crewRows()
    .map(
      (c) =>
        `<span class="badge ${c.busy ? "badge-yellow" : "badge-green"}">${c.crewId}: ${
          c.busy ? "busy" : "idle"
        }</span>`,
    )
    .join(" ");

  root.querySelector("#alerts")!.innerHTML = store.alerts
    .slice(0, 50)
    .map(
      (a) => `<div class="alert-item ${a.cleared ? "cleared" : ""}">
        <span class="badge kind-${a.kind.toLowerCase()}">${a.kind}</span>
        ${a.sourceKind} ${a.sourceId}
        ${a.addressText ? `<span class="muted">${a.addressText}</span>` : ""}
        <span class="muted">${ageText(now, a.raisedAt)}</span>
      </div>`,
    )
    .join("");

  const idleCrews = store.crewRows().filter((c) => !c.busy);
  const columns = store.kanban();
  root.querySelector("#kanban")!.innerHTML = KANBAN_COLUMNS.map(
    (state) => `<div class="column" data-column="${state}">
      <h3>${state} (${columns[state].length})</h3>
      ${columns[state]
        .map(
          (card) => `<div class="card ${card.overdue ? "overdue" : ""}" data-card="${card.complaintId}">
            <strong>${card.complaintId}</strong>
            ${card.overdue ? '<span class="badge badge-red">overdue</span>' : ""}
            <p>${card.description}</p>
            <p class="muted">${card.addressText}</p>
            ${card.assignedCrew ? `<p class="muted">crew ${card.assignedCrew}</p>` : ""}
            ${
              state === "Submitted"
                ? `<select data-crew-for="${card.complaintId}">${idleCrews
                    .map((c) => `<option value="${c.crewId}">${c.crewId}</option>`)
                    .join("")}</select>
                  <button data-dispatch="${card.complaintId}">dispatch</button>`
                : ""
            }
          </div>`,
        )
        .join("")}
    </div>`,
  ).join("");
}

function toast(root: HTMLElement, text: string): void {
  const el = root.querySelector("#toast")!;
  el.textContent = text;
  el.classList.remove("hidden");
  setTimeout(() => el.classList.add("hidden"), 4000);
}
