import { mountCitizen } from "./citizen.js";
import { mountOps } from "./ops.js";

function route(): void {
  const root = document.getElementById("app")!;
  const hash = window.location.hash || "#/ops";
  if (hash.startsWith("#/citizen")) {
    void mountCitizen(root);
  } else {
    void mountOps(root);
  }
}

window.addEventListener("hashchange", () => window.location.reload());
route();
