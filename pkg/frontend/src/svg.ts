/**
 * Minimal SVG chart builder. No DOM, no canvas: panels are composed as
 * strings so the scripts run headless anywhere node runs.
 */

export interface Series {
  label: string;
  points: { x: number; y: number }[];
  color: string;
  dashed?: boolean;
  errorBars?: number[]; // half-widths, same length as points
}

export interface PanelSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  logY?: boolean;
  annotations?: string[];
}

const W = 460;
const H = 380;
const MARGIN = { left: 64, right: 16, top: 36, bottom: 46 };

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / n / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * span; v += s) ticks.push(v);
  return ticks;
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0);
  return String(Number(v.toPrecision(4)));
}

export function renderPanel(spec: PanelSpec, xOffset = 0): string {
  const pts = spec.series.flatMap((s) => s.points);
  const finite = pts.filter((p) => Number.isFinite(p.x) && Number.isFinite(p.y));
  if (finite.length === 0) {
    return `<g transform="translate(${xOffset},0)"><text x="${W / 2}" y="${H / 2}" text-anchor="middle" font-size="13">no finite data</text></g>`;
  }
  const xs = finite.map((p) => p.x);
  const ysRaw = spec.logY ? finite.filter((p) => p.y > 0).map((p) => Math.log10(p.y)) : finite.map((p) => p.y);
  let xLo = Math.min(...xs), xHi = Math.max(...xs);
  let yLo = Math.min(...ysRaw), yHi = Math.max(...ysRaw);
  if (xLo === xHi) { xLo -= 1; xHi += 1; }
  if (yLo === yHi) { yLo -= 1; yHi += 1; }
  const yPad = 0.06 * (yHi - yLo);
  yLo -= yPad; yHi += yPad;

  const plotW = W - MARGIN.left - MARGIN.right;
  const plotH = H - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) => MARGIN.left + ((x - xLo) / (xHi - xLo)) * plotW;
  const sy = (yVal: number) => {
    const y = spec.logY ? Math.log10(yVal) : yVal;
    return MARGIN.top + plotH - ((y - yLo) / (yHi - yLo)) * plotH;
  };

  const parts: string[] = [`<g transform="translate(${xOffset},0)" font-family="sans-serif">`];
  parts.push(`<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="white" stroke="#333"/>`);
  parts.push(`<text x="${MARGIN.left + plotW / 2}" y="${MARGIN.top - 12}" text-anchor="middle" font-size="14">${esc(spec.title)}</text>`);

  for (const t of niceTicks(xLo, xHi)) {
    const px = sx(t);
    parts.push(`<line x1="${px}" y1="${MARGIN.top}" x2="${px}" y2="${MARGIN.top + plotH}" stroke="#ddd"/>`);
    parts.push(`<text x="${px}" y="${MARGIN.top + plotH + 16}" text-anchor="middle" font-size="11">${fmtTick(t)}</text>`);
  }
  for (const t of niceTicks(yLo, yHi)) {
    const py = MARGIN.top + plotH - ((t - yLo) / (yHi - yLo)) * plotH;
    const label = spec.logY ? `1e${fmtTick(t)}` : fmtTick(t);
    parts.push(`<line x1="${MARGIN.left}" y1="${py}" x2="${MARGIN.left + plotW}" y2="${py}" stroke="#ddd"/>`);
    parts.push(`<text x="${MARGIN.left - 6}" y="${py + 4}" text-anchor="end" font-size="11">${label}</text>`);
  }
  parts.push(`<text x="${MARGIN.left + plotW / 2}" y="${H - 8}" text-anchor="middle" font-size="12">${esc(spec.xLabel)}</text>`);
  parts.push(`<text transform="translate(14,${MARGIN.top + plotH / 2}) rotate(-90)" text-anchor="middle" font-size="12">${esc(spec.yLabel)}</text>`);

  for (const s of spec.series) {
    const visible = s.points.filter((p) => Number.isFinite(p.x) && Number.isFinite(p.y) && (!spec.logY || p.y > 0));
    const path = visible.map((p, i) => `${i === 0 ? "M" : "L"}${sx(p.x).toFixed(2)},${sy(p.y).toFixed(2)}`).join(" ");
    if (visible.length > 1) {
      parts.push(`<path d="${path}" fill="none" stroke="${s.color}" stroke-width="1.6"${s.dashed ? ' stroke-dasharray="6 4"' : ""}/>`);
    }
    visible.forEach((p, i) => {
      if (s.errorBars && Number.isFinite(s.errorBars[i]) && !spec.logY) {
        const half = s.errorBars[i];
        parts.push(`<line x1="${sx(p.x)}" y1="${sy(p.y - half)}" x2="${sx(p.x)}" y2="${sy(p.y + half)}" stroke="${s.color}" stroke-width="1"/>`);
      }
      parts.push(`<circle cx="${sx(p.x).toFixed(2)}" cy="${sy(p.y).toFixed(2)}" r="3" fill="${s.color}"/>`);
    });
  }

  // legend + free-text annotations, top-right corner of the plot area
  let line = 0;
  for (const s of spec.series.filter((t) => t.label)) {
    const y = MARGIN.top + 16 + 15 * line++;
    parts.push(`<line x1="${MARGIN.left + plotW - 120}" y1="${y - 4}" x2="${MARGIN.left + plotW - 100}" y2="${y - 4}" stroke="${s.color}" stroke-width="2"${s.dashed ? ' stroke-dasharray="6 4"' : ""}/>`);
    parts.push(`<text x="${MARGIN.left + plotW - 94}" y="${y}" font-size="11">${esc(s.label)}</text>`);
  }
  for (const note of spec.annotations ?? []) {
    const y = MARGIN.top + 16 + 15 * line++;
    parts.push(`<text x="${MARGIN.left + plotW - 120}" y="${y}" font-size="11">${esc(note)}</text>`);
  }
  parts.push("</g>");
  return parts.join("\n");
}

export function renderFigure(panels: PanelSpec[]): string {
  const body = panels.map((p, i) => renderPanel(p, i * W)).join("\n");
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${panels.length * W}" height="${H}" viewBox="0 0 ${panels.length * W} ${H}">\n<rect width="100%" height="100%" fill="white"/>\n${body}\n</svg>\n`;
}
