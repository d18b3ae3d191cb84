// Citizen portal: NID registration, complaint form with photo + editable
// location pin, then a live tracking view that shows the exact feedback text.

import { getJson, postJson, ApiCallError, EventStream } from "./api.js";
import { coordText } from "./format.js";
import { CityStore } from "./store.js";
import type { ComplaintSnapshot, Snapshot } from "./types.js";

interface CitizenSession {
  citizen_id: string;
  nid: string;
  name: string;
}

export async function mountCitizen(root: HTMLElement): Promise<void> {
  const saved = sessionStorage.getItem("civicbin-citizen");
  if (saved) {
    showComplaintForm(root, JSON.parse(saved) as CitizenSession);
  } else {
    showRegistration(root);
  }
}

function showRegistration(root: HTMLElement): void {
  root.innerHTML = `
    <header><h1>civicbin citizen</h1></header>
    <main class="narrow">
      <section class="panel">
        <h2>Register with your NID</h2>
        <form id="register">
          <label>NID number <input name="nid" required></label>
          <div class="field-error hidden" data-error-for="nid"></div>
          <label>Name <input name="name" required></label>
          <label>Phone <input name="phone" required></label>
          <button type="submit">Register</button>
        </form>
      </section>
    </main>`;
  const form = root.querySelector<HTMLFormElement>("#register")!;
  form.addEventListener("submit", async (raw) => {
    raw.preventDefault();
    const data = new FormData(form);
    const errorBox = root.querySelector<HTMLElement>('[data-error-for="nid"]')!;
    errorBox.classList.add("hidden");
    try {
      const citizen = await postJson<CitizenSession>("/api/v1/citizens", {
        nid: data.get("nid"),
        name: data.get("name"),
        phone: data.get("phone"),
      });
      sessionStorage.setItem("civicbin-citizen", JSON.stringify(citizen));
      showComplaintForm(root, citizen);
    } catch (err) {
      if (err instanceof ApiCallError) {
        // surfaced verbatim, highlighted on the NID field
        errorBox.textContent = `${err.body.error}: ${err.body.detail}`;
        errorBox.classList.remove("hidden");
      }
    }
  });
}

function showComplaintForm(root: HTMLElement, citizen: CitizenSession): void {
  root.innerHTML = `
    <header><h1>civicbin citizen</h1><span class="muted">${citizen.name}</span></header>
    <main class="narrow">
      <section class="panel">
        <h2>Report uncollected waste</h2>
        <form id="complaint">
          <label>Photo <input type="file" name="photo" accept="image/*"></label>
          <label>Location pin
            <span class="pin">
              <input name="lat" type="number" step="0.00001" required>
              <input name="lon" type="number" step="0.00001" required>
            </span>
          </label>
          <p class="muted" id="pin-hint">locating…</p>
          <label>Description <textarea name="description" required></textarea></label>
          <div class="field-error hidden" data-error-for="form"></div>
          <button type="submit" id="submit" disabled>Submit complaint</button>
        </form>
      </section>
      <section class="panel hidden" id="tracking"></section>
    </main>`;

  const form = root.querySelector<HTMLFormElement>("#complaint")!;
  const photo = form.querySelector<HTMLInputElement>('input[name="photo"]')!;
  const lat = form.querySelector<HTMLInputElement>('input[name="lat"]')!;
  const lon = form.querySelector<HTMLInputElement>('input[name="lon"]')!;
  const submit = form.querySelector<HTMLButtonElement>("#submit")!;
  const hint = root.querySelector<HTMLElement>("#pin-hint")!;

  // prefill from browser geolocation; the pin stays editable and an edited
  // pin is sent as the override
  let prefill: { lat: number; lon: number } | null = null;
  if (navigator.geolocation) {
    navigator.geolocation.getCurrentPosition(
      (position) => {
        prefill = { lat: position.coords.latitude, lon: position.coords.longitude };
        lat.value = String(prefill.lat.toFixed(5));
        lon.value = String(prefill.lon.toFixed(5));
        hint.textContent = `pin prefilled from device: ${coordText(prefill.lat, prefill.lon)}`;
      },
      () => {
        hint.textContent = "device location unavailable; place the pin manually";
      },
    );
  } else {
    hint.textContent = "no geolocation; place the pin manually";
  }

  // submit stays disabled until a photo is attached
  photo.addEventListener("change", () => {
    submit.disabled = !(photo.files && photo.files.length > 0);
  });

  form.addEventListener("submit", async (raw) => {
    raw.preventDefault();
    const errorBox = root.querySelector<HTMLElement>('[data-error-for="form"]')!;
    errorBox.classList.add("hidden");
    const file = photo.files?.[0];
    if (!file) return;
    const pin = { lat: Number(lat.value), lon: Number(lon.value) };
    const edited =
      prefill === null ||
      Math.abs(pin.lat - prefill.lat) > 1e-9 ||
      Math.abs(pin.lon - prefill.lon) > 1e-9;
    const payload: Record<string, unknown> = {
      citizen_id: citizen.citizen_id,
      photo_ref: `${file.name}:${file.size}`,
      device_location: prefill ?? pin,
      description: new FormData(form).get("description"),
    };
    if (edited) payload.location_override = pin;
    try {
      const complaint = await postJson<ComplaintSnapshot>("/api/v1/complaints", payload);
      trackComplaint(root, complaint);
    } catch (err) {
      if (err instanceof ApiCallError) {
        errorBox.textContent = `${err.body.error}: ${err.body.detail}`;
        errorBox.classList.remove("hidden");
      }
    }
  });
}

function trackComplaint(root: HTMLElement, complaint: ComplaintSnapshot): void {
  const store = new CityStore();
  const tracking = root.querySelector<HTMLElement>("#tracking")!;
  tracking.classList.remove("hidden");

  const render = () => {
    const card = store.complaints.get(complaint.complaint_id);
    const state = card?.state ?? complaint.state;
    const note = store.feedbackFor(complaint.complaint_id);
    tracking.innerHTML = `
      <h2>Complaint ${complaint.complaint_id}</h2>
      <p>Status: <span class="badge state-${state.toLowerCase()}">${state}</span></p>
      <p class="muted">${complaint.address_text}</p>
      ${note ? `<div class="banner success">${note.body}</div>` : ""}`;
  };

  void (async () => {
    const snapshot = await getJson<Snapshot<ComplaintSnapshot>>("/api/v1/complaints");
    store.loadSnapshots({
      bins: { seq: snapshot.seq, items: [] },
      stations: { seq: snapshot.seq, items: [] },
      alerts: { seq: snapshot.seq, items: [] },
      complaints: snapshot,
      crews: { seq: snapshot.seq, items: [] },
    });
    render();
    const stream = new EventStream({
      onEvent: (event) => {
        if (store.applyEvent(event)) render();
      },
      onStatus: () => undefined,
    });
    stream.start(store.seq);
  })();
}
