/**
 * Deterministic SVG reward-curve figures: one comparison figure per pair
 * of variants, each with a smoothed mean line and a +/-1 sample-std band.
 *
 * Output is pure string assembly, so reruns on the same input are
 * byte-identical.
 */

import { CurveSummary, groupByVariant, summaryCsv } from "./summary.js";

const WIDTH = 700;
const HEIGHT = 450;
const MARGIN = { left: 60, right: 16, top: 16, bottom: 44 };
const COLORS = ["#1f77b4", "#d62728", "#2ca02c"];

interface Scale {
  (v: number): number;
}

function linear(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

function fmt(v: number): string {
  return v.toFixed(2);
}

function polyline(xs: number[], ys: number[]): string {
  return xs.map((x, i) => `${fmt(x)},${fmt(ys[i])}`).join(" ");
}

function figure(a: string, b: string, byVariant: Map<string, CurveSummary[]>): string {
  const series = [a, b].map((v) => byVariant.get(v)!);
  const episodes = series.flat().map((s) => s.episodeIndex);
  const lows = series.flat().map((s) => s.meanSmooth - s.rewardStd);
  const highs = series.flat().map((s) => s.meanSmooth + s.rewardStd);
  const x0 = Math.min(...episodes);
  const x1 = Math.max(...episodes);
  let y0 = Math.min(...lows);
  let y1 = Math.max(...highs);
  const pad = (y1 - y0 || 1) * 0.05;
  y0 -= pad;
  y1 += pad;

  const sx = linear(x0, x1, MARGIN.left, WIDTH - MARGIN.right);
  const sy = linear(y0, y1, HEIGHT - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
  ];

  // axes with end-point labels
  const axisY = HEIGHT - MARGIN.bottom;
  parts.push(
    `<line x1="${MARGIN.left}" y1="${axisY}" x2="${WIDTH - MARGIN.right}" y2="${axisY}" stroke="black"/>`,
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${axisY}" stroke="black"/>`,
    `<text x="${fmt(sx(x0))}" y="${axisY + 16}" text-anchor="middle">${x0}</text>`,
    `<text x="${fmt(sx(x1))}" y="${axisY + 16}" text-anchor="middle">${x1}</text>`,
    `<text x="${MARGIN.left - 6}" y="${fmt(sy(y0))}" text-anchor="end">${fmt(y0)}</text>`,
    `<text x="${MARGIN.left - 6}" y="${fmt(sy(y1))}" text-anchor="end">${fmt(y1)}</text>`,
    `<text x="${(MARGIN.left + WIDTH - MARGIN.right) / 2}" y="${HEIGHT - 8}" ` +
      `text-anchor="middle">episode</text>`,
    `<text x="14" y="${(MARGIN.top + axisY) / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 14 ${(MARGIN.top + axisY) / 2})">episodic reward</text>`,
  );

  [a, b].forEach((variant, k) => {
    const pts = byVariant.get(variant)!;
    const xs = pts.map((s) => sx(s.episodeIndex));
    const mid = pts.map((s) => sy(s.meanSmooth));
    const lo = pts.map((s) => sy(s.meanSmooth - s.rewardStd));
    const hi = pts.map((s) => sy(s.meanSmooth + s.rewardStd));
    const band = polyline(xs, hi) + " " + polyline([...xs].reverse(), [...lo].reverse());
    const color = COLORS[k % COLORS.length];
    parts.push(
      `<polygon points="${band}" fill="${color}" fill-opacity="0.2" stroke="none"/>`,
      `<polyline points="${polyline(xs, mid)}" fill="none" stroke="${color}" stroke-width="1.5"/>`,
      `<text x="${WIDTH - MARGIN.right - 8}" y="${MARGIN.top + 16 + 16 * k}" ` +
        `text-anchor="end" fill="${color}">${variant}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export interface RenderedFile {
  name: string;
  content: string;
}

/** One figure per variant pair plus the sidecar summary CSV; pure function. */
export function render(summaries: CurveSummary[], scenario = "results"): RenderedFile[] {
  if (summaries.length === 0) {
    throw new Error("nothing to plot: no post-fault records");
  }
  const byVariant = groupByVariant(summaries);
  const variants = [...byVariant.keys()].sort();
  const files: RenderedFile[] = [
    { name: `${scenario}_summary.csv`, content: summaryCsv(summaries) },
  ];
  for (let i = 0; i < variants.length; i++) {
    for (let j = i + 1; j < variants.length; j++) {
      files.push({
        name: `${scenario}_${variants[i]}_vs_${variants[j]}.svg`,
        content: figure(variants[i], variants[j], byVariant),
      });
    }
  }
  return files;
}
