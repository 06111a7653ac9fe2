import init, { time_penalty, time_penalty_curve, Facility, normalized_scores } from "./pkg/judge_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function showError(el, e) {
  el.textContent = e instanceof Error ? e.message : String(e);
  el.className = "error";
}

// Time penalty

function drawPenalty() {
  const points = num("tp-points");
  const limit = Math.max(1, num("tp-limit"));
  $("tp-cpu").max = limit;
  const cpu = Math.min(num("tp-cpu"), limit);
  try {
    $("tp-score").textContent = time_penalty(points, limit, cpu);
    $("tp-score").className = "";
  } catch (e) {
    showError($("tp-score"), e);
  }
  const svg = $("tp-curve");
  const w = svg.width.baseVal.value, h = svg.height.baseVal.value, pad = 20;
  const ys = time_penalty_curve(points, limit, 100);
  const top = Math.max(1, Math.abs(points));
  const x = (i) => pad + (w - 2 * pad) * i / (ys.length - 1);
  const y = (v) => h - pad - (h - 2 * pad) * v / top;
  const d = Array.from(ys, (v, i) => `${i ? "L" : "M"}${x(i).toFixed(1)},${y(v).toFixed(1)}`).join(" ");
  const cx = pad + (w - 2 * pad) * cpu / limit;
  svg.innerHTML =
    `<path d="M${pad},${pad} V${h - pad} H${w - pad}" fill="none" stroke="#333"/>` +
    `<path d="${d}" fill="none" stroke="#1f5fbf" stroke-width="2"/>` +
    `<line x1="${cx}" x2="${cx}" y1="${pad}" y2="${h - pad}" stroke="#c0392b"/>`;
}

// Facility location

const CELL = 16;
let facility = null;
let centers = [];

function drawFacility() {
  const canvas = $("fl-canvas");
  const w = facility.width(), h = facility.height();
  canvas.width = w * CELL;
  canvas.height = h * CELL;
  const ctx = canvas.getContext("2d");
  const grid = facility.grid();
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      const v = 255 - grid[y * w + x];
      ctx.fillStyle = `rgb(255, ${v}, ${v})`;
      ctx.fillRect(x * CELL, y * CELL, CELL, CELL);
    }
  }
  const radii = facility.radii();
  ctx.lineWidth = 2;
  for (let i = 0; i < radii.length; i++) {
    const cx = (centers[2 * i] + 0.5) * CELL, cy = (centers[2 * i + 1] + 0.5) * CELL;
    ctx.strokeStyle = i === Number($("fl-pick").value) ? "#1f5fbf" : "#2e8b57";
    ctx.beginPath();
    ctx.arc(cx, cy, (radii[i] + 0.5) * CELL, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillRect(cx - 3, cy - 3, 6, 6);
  }
  try {
    $("fl-objective").textContent = facility.objective(Int32Array.from(centers));
    $("fl-objective").className = "";
  } catch (e) {
    showError($("fl-objective"), e);
  }
}

function generate() {
  try {
    facility?.free();
    facility = new Facility(num("fl-w"), num("fl-h"), num("fl-k"), BigInt(num("fl-seed")));
  } catch (e) {
    facility = null;
    showError($("fl-objective"), e);
    return;
  }
  centers = Array.from(facility.greedy());
  $("fl-pick").innerHTML = facility.radii().map((r, i) => `<option value="${i}">#${i + 1} (r=${r})</option>`).join("");
  drawFacility();
}

// Normalized scores

function drawScores() {
  const out = $("ns-out");
  const rows = $("ns-values").value.trim().split("\n").map((l) => l.trim().split(/\s+/).map(Number));
  const n = rows[0]?.length ?? 0;
  if (!n || rows.some((r) => r.length !== n || r.some(Number.isNaN))) {
    showError(out, "every row needs the same number of values");
    return;
  }
  let scores;
  try {
    scores = normalized_scores($("ns-max").checked, n, Float64Array.from(rows.flat()));
  } catch (e) {
    showError(out, e);
    return;
  }
  out.className = "";
  const head = `<tr><th>submission</th>${rows[0].map((_, i) => `<th>#${i + 1}</th>`).join("")}<th>score</th></tr>`;
  const body = rows
    .map((r, j) => `<tr><td>${j + 1}</td>${r.map((v) => `<td>${v < 0 ? "fail" : v}</td>`).join("")}<td>${scores[j]}</td></tr>`)
    .join("");
  out.innerHTML = `<table>${head}${body}</table>`;
}

await init();

for (const id of ["tp-points", "tp-limit", "tp-cpu"]) $(id).addEventListener("input", drawPenalty);
drawPenalty();

$("fl-gen").addEventListener("click", generate);
$("fl-greedy").addEventListener("click", () => {
  if (!facility) return;
  centers = Array.from(facility.greedy());
  drawFacility();
});
$("fl-improve").addEventListener("click", () => {
  if (!facility) return;
  centers = Array.from(facility.improve(Int32Array.from(centers), 20));
  drawFacility();
});
$("fl-pick").addEventListener("change", () => facility && drawFacility());
$("fl-canvas").addEventListener("click", (ev) => {
  if (!facility) return;
  const rect = ev.target.getBoundingClientRect();
  const i = Number($("fl-pick").value);
  centers[2 * i] = Math.floor((ev.clientX - rect.left) / CELL);
  centers[2 * i + 1] = Math.floor((ev.clientY - rect.top) / CELL);
  drawFacility();
});
generate();

$("ns-values").addEventListener("input", drawScores);
$("ns-max").addEventListener("change", drawScores);
drawScores();
