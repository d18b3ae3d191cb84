import type { LedColor } from "./types.js";

export function fillPercent(fill: number): string {
  return `${Math.round(fill * 100)}%`;
}

// LED color maps 1:1 to a badge class; no other path decides badge colors.
export function ledBadgeClass(led: LedColor): string {
  switch (led) {
    case "Green":
      return "badge-green";
    case "Yellow":
      return "badge-yellow";
    case "Red":
      return "badge-red";
  }
}

export function ageText(nowMs: number, thenMs: number | null): string {
  if (thenMs === null) return "never";
  const seconds = Math.max(0, Math.floor((nowMs - thenMs) / 1000));
  if (seconds < 60) return `${seconds}s ago`;
  const minutes = Math.floor(seconds / 60);
  if (minutes < 60) return `${minutes}m ago`;
  const hours = Math.floor(minutes / 60);
  if (hours < 48) return `${hours}h ${minutes % 60}m ago`;
  return `${Math.floor(hours / 24)}d ago`;
}

export function coordText(lat: number, lon: number): string {
  return `${lat.toFixed(5)}, ${lon.toFixed(5)}`;
}
