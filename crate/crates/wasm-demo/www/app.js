import init, { dummy_tracts, sweep_trajectories, table_association } from "./pkg/swapsim_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function dataParams() {
  return {
    n_tracts: num("d-tracts"),
    persons_per_tract: num("d-persons"),
    slope_low: num("d-lo"),
    slope_high: num("d-hi"),
    seed: num("d-seed"),
  };
}

function show(id, text, isError = false) {
  $(id).textContent = text;
  $(id).className = isError ? "out err" : "out";
}

function axes(ctx, w, h, pad, xLabel) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  for (const v of [0, 0.25, 0.5, 0.75, 1]) {
    const y = h - pad - v * (h - 1.5 * pad);
    ctx.fillText(v.toFixed(2), 4, y + 4);
  }
  ctx.fillText(xLabel, w / 2 - 30, h - 8);
}

function hline(ctx, y, color, w, pad) {
  ctx.strokeStyle = color;
  ctx.setLineDash([6, 4]);
  ctx.beginPath();
  ctx.moveTo(pad, y);
  ctx.lineTo(w - pad / 2, y);
  ctx.stroke();
  ctx.setLineDash([]);
}

function runDummy() {
  try {
    const out = JSON.parse(dummy_tracts(JSON.stringify(dataParams())));
    const c = $("d-chart"), ctx = c.getContext("2d");
    const pad = 40, w = c.width, h = c.height;
    const yOf = (v) => h - pad - v * (h - 1.5 * pad);
    axes(ctx, w, h, pad, "tract");
    const step = (w - 1.5 * pad) / out.tracts.length;
    out.tracts.forEach((t, i) => {
      if (t.v === null) return;
      ctx.fillStyle = out.combined_v !== null && t.v < out.combined_v ? "#4a7bd0" : "#d07a4a";
      ctx.fillRect(pad + i * step + 1, yOf(t.v), Math.max(step - 2, 1), h - pad - yOf(t.v));
    });
    if (out.combined_v !== null) hline(ctx, yOf(out.combined_v), "#000", w, pad);
    if (out.cross_tract_mean_v !== null) hline(ctx, yOf(out.cross_tract_mean_v), "#2a2", w, pad);
    const fmt = (v) => (v === null ? "undefined" : v.toFixed(4));
    show("d-info",
      `combined V ${fmt(out.combined_v)} (black)   mean tract V ${fmt(out.cross_tract_mean_v)} (green)\n` +
      `${(out.share_below_combined * 100).toFixed(0)}% of tracts below the combined V (blue)`);
  } catch (e) {
    show("d-info", String(e), true);
  }
}

function runSweep() {
  show("s-info", "running...");
  // let the message paint before the synchronous sweep blocks the page
  setTimeout(() => {
    try {
      const params = {
        data: dataParams(),
        max_rate: num("s-max"),
        steps: num("s-steps"),
        replications: num("s-reps"),
        targeted: $("s-targeted").checked,
      };
      const t0 = performance.now();
      const out = JSON.parse(sweep_trajectories(JSON.stringify(params)));
      const ms = performance.now() - t0;
      const c = $("s-chart"), ctx = c.getContext("2d");
      const pad = 40, w = c.width, h = c.height;
      const maxRate = out.rates[out.rates.length - 1];
      const xOf = (r) => pad + (r / maxRate) * (w - 1.5 * pad);
      const yOf = (v) => h - pad - v * (h - 1.5 * pad);
      axes(ctx, w, h, pad, "swap rate");
      ctx.fillStyle = "#444";
      ctx.fillText(maxRate.toFixed(2), w - pad, h - pad + 14);
      out.trajectories.forEach((t, i) => {
        ctx.strokeStyle = `hsl(${(i * 137) % 360}, 55%, 50%)`;
        ctx.beginPath();
        let started = false;
        t.mean_v.forEach((v, k) => {
          if (v === null) { started = false; return; }
          const x = xOf(out.rates[k]), y = yOf(v);
          if (started) ctx.lineTo(x, y); else ctx.moveTo(x, y);
          started = true;
        });
        ctx.stroke();
      });
      if (out.cross_tract_mean_v !== null) hline(ctx, yOf(out.cross_tract_mean_v), "#2a2", w, pad);
      show("s-info",
        `${(out.shrink_fraction * 100).toFixed(0)}% of tracts ended closer to the mean tract V (green)` +
        `   [${ms.toFixed(0)} ms]`);
    } catch (e) {
      show("s-info", String(e), true);
    }
  }, 20);
}

function runTable() {
  try {
    const rows = $("t-input").value.trim().split("\n")
      .map((line) => line.trim().split(/[\s,]+/).filter(Boolean).map(Number));
    const out = JSON.parse(table_association(JSON.stringify({ rows })));
    show("t-info",
      `chi-square ${out.chi_square.toFixed(4)}\n` +
      `Cramér's V ${out.v === null ? "undefined" : out.v.toFixed(4)}\n` +
      `non-empty rows ${out.effective_k}, columns ${out.effective_r}`);
  } catch (e) {
    show("t-info", String(e), true);
  }
}

await init();
$("d-run").onclick = runDummy;
$("s-run").onclick = runSweep;
$("t-run").onclick = runTable;
runDummy();
runTable();
