/** Display formatting helpers; presentation only, never computation. */

import type { CourseAggregate, ModuleMeta } from "./types.js";

export function formatWorkload(totals: CourseAggregate): string {
  const min = roundHours(totals.workload_hours.min);
  const max = roundHours(totals.workload_hours.max);
  return min === max ? `${min} h` : `${min}-${max} h`;
}

function roundHours(value: number): string {
  const rounded = Math.round(value * 10) / 10;
  return Number.isInteger(rounded) ? String(rounded) : rounded.toFixed(1);
}

export function formatDuration(minutes: number): string {
  if (minutes < 60) return `${minutes} min`;
  if (minutes < 24 * 60) return `${trim(minutes / 60)} h`;
  if (minutes < 7 * 24 * 60) return `${trim(minutes / (24 * 60))} d`;
  return `${trim(minutes / (7 * 24 * 60))} wk`;
}

function trim(value: number): string {
  const rounded = Math.round(value * 10) / 10;
  return Number.isInteger(rounded) ? String(rounded) : rounded.toFixed(1);
}

export function formatStars(meta: ModuleMeta): string {
  if (meta.rating.count === 0) return "unrated";
  const mean = meta.rating.sum / meta.rating.count;
  return `${"★".repeat(Math.round(mean))} ${mean.toFixed(1)} (${meta.rating.count})`;
}

export function formatPrice(price: number): string {
  return price === 0 ? "free" : `$${price}`;
}
