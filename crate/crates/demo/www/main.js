import init, { runTracking, JacobianCase, observabilityCurve } from "./pkg/topotrack_demo.js";

const COLORS = { "EKF": "#d95f02", "GSP-EKF": "#1b9e77", "Oracle": "#7570b3", naive: "#d95f02", dp: "#1b9e77" };
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function axes(ctx, w, h, pad, xr, yr, xlabel, ylabel) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
  ctx.fillText(xlabel, w / 2, h - 6);
  ctx.fillText(ylabel, 4, pad / 2 - 4 + 10);
  ctx.fillText(yr[1].toPrecision(3), 4, pad / 2 + 10);
  ctx.fillText(yr[0].toPrecision(3), 4, h - pad);
  ctx.fillText(String(xr[0]), pad, h - pad + 14);
  ctx.fillText(String(xr[1]), w - pad, h - pad + 14);
  const sx = (x) => pad + ((x - xr[0]) / (xr[1] - xr[0] || 1)) * (w - 1.5 * pad);
  const sy = (y) => h - pad - ((y - yr[0]) / (yr[1] - yr[0] || 1)) * (h - 1.5 * pad);
  return { sx, sy };
}

function polyline(ctx, pts, color) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  let pen = false;
  for (const [x, y] of pts) {
    if (!Number.isFinite(y)) { pen = false; continue; }
    pen ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    pen = true;
  }
  ctx.stroke();
  ctx.lineWidth = 1;
}

function showTracking() {
  const params = {
    n_nodes: num("tr-n"), edges: num("tr-edges"), t_max: num("tr-t"),
    change_interval: num("tr-int"), order: num("tr-p"), sigma_e: num("tr-se"),
    sigma_v: num("tr-sv"), mu: num("tr-mu"), seed: num("tr-seed"),
  };
  let run;
  try {
    run = JSON.parse(runTracking(JSON.stringify(params)));
  } catch (e) {
    $("tr-out").textContent = String(e);
    return;
  }
  const canvas = $("tr-curve");
  const ctx = canvas.getContext("2d");
  const all = run.curves.flatMap((c) => c.nmse_db).filter(Number.isFinite);
  const yr = [Math.floor(Math.min(...all)), Math.ceil(Math.max(...all))];
  const { sx, sy } = axes(ctx, canvas.width, canvas.height, 40, [1, params.t_max], yr, "t", "NMSE dB");
  ctx.strokeStyle = "#ddd";
  for (const t of run.event_times) {
    ctx.beginPath();
    ctx.moveTo(sx(t), sy(yr[0]));
    ctx.lineTo(sx(t), sy(yr[1]));
    ctx.stroke();
  }
  for (const c of run.curves) {
    polyline(ctx, c.nmse_db.map((v, i) => [sx(i + 1), sy(v)]), COLORS[c.tracker]);
  }
  $("tr-legend").innerHTML = run.curves
    .map((c) => `<span style="color:${COLORS[c.tracker]}">${c.tracker}</span>`)
    .join("");

  const wc = $("tr-weights");
  const wctx = wc.getContext("2d");
  const m = run.true_weights.length;
  const wmax = Math.max(1, ...run.true_weights, ...run.curves.flatMap((c) => c.final_weights));
  const s = axes(wctx, wc.width, wc.height, 40, [0, m - 1], [0, wmax], "edge index", "weight");
  const slot = (wc.width - 60) / m;
  run.true_weights.forEach((v, e) => {
    wctx.fillStyle = "#bbb";
    wctx.fillRect(s.sx(e) - slot * 0.4, s.sy(v), slot * 0.8, s.sy(0) - s.sy(v));
  });
  for (const c of run.curves) {
    wctx.fillStyle = COLORS[c.tracker];
    c.final_weights.forEach((v, e) => wctx.fillRect(s.sx(e) - 1.5, s.sy(v) - 1.5, 3, 3));
  }

  const mean = (xs) => xs.reduce((a, b) => a + b, 0) / xs.length;
  $("tr-out").textContent = run.curves
    .map((c) => {
      const tail = c.nmse_db.slice(Math.floor(c.nmse_db.length / 2));
      const status = c.failure ? `  failed ${c.failure}` : "";
      return `${c.tracker.padEnd(8)} second-half NMSE ${mean(tail).toFixed(2)} dB  final EIER ${c.eier.at(-1)?.toFixed(2)} %${status}`;
    })
    .join("\n");
}

function timeOnce(f) {
  const t0 = performance.now();
  f();
  return performance.now() - t0;
}

function median(xs) {
  const s = [...xs].sort((a, b) => a - b);
  const k = s.length;
  return k % 2 ? s[(k - 1) / 2] : (s[k / 2 - 1] + s[k / 2]) / 2;
}

function showJacobian() {
  const n = num("jc-n");
  const repeats = num("jc-r");
  const orders = $("jc-p").value.split(",").map((s) => Number(s.trim())).filter((p) => p >= 1);
  const rows = [];
  try {
    for (const p of orders) {
      const naive = [];
      const dp = [];
      let gap = 0;
      for (let r = 0; r < repeats; r++) {
        const c = new JacobianCase(n, p, BigInt(r));
        naive.push(timeOnce(() => c.naive()));
        dp.push(timeOnce(() => c.dp()));
        gap = Math.max(gap, c.relativeGap());
        c.free();
      }
      rows.push({ p, naive: median(naive), dp: median(dp), gap });
    }
  } catch (e) {
    $("jc-out").textContent = String(e);
    return;
  }
  const canvas = $("jc-plot");
  const ctx = canvas.getContext("2d");
  const lx = rows.map((r) => Math.log2(r.p));
  const ly = rows.flatMap((r) => [r.naive, r.dp]).map((v) => Math.log10(Math.max(v, 1e-3)));
  const { sx, sy } = axes(ctx, canvas.width, canvas.height, 40,
    [Math.min(...lx), Math.max(...lx)], [Math.min(...ly), Math.max(...ly)], "log2 P", "log10 ms");
  for (const key of ["naive", "dp"]) {
    polyline(ctx, rows.map((r) => [sx(Math.log2(r.p)), sy(Math.log10(Math.max(r[key], 1e-3)))]), COLORS[key]);
  }
  $("jc-out").textContent = "P    naive ms    dp ms     relative gap\n" + rows
    .map((r) => `${String(r.p).padEnd(4)} ${r.naive.toFixed(3).padStart(9)} ${r.dp.toFixed(3).padStart(9)}   ${r.gap.toExponential(1)}`)
    .join("\n");
}

function showObservability() {
  const n = num("ob-n");
  let curve;
  try {
    curve = JSON.parse(observabilityCurve(n, num("ob-trials"), BigInt(num("ob-seed"))));
  } catch (e) {
    $("ob-out").textContent = String(e);
    return;
  }
  const canvas = $("ob-plot");
  const ctx = canvas.getContext("2d");
  const { sx, sy } = axes(ctx, canvas.width, canvas.height, 40, [1, n], [0, 1], "T", "observable");
  const bar = (canvas.width - 60) / n;
  ctx.fillStyle = "#7570b3";
  for (const pt of curve) ctx.fillRect(sx(pt.t) - bar * 0.35, sy(pt.fraction), bar * 0.7, sy(0) - sy(pt.fraction));
  const m = (n * (n - 1)) / 2;
  $("ob-out").textContent = `unknowns ${m}\nT  fraction  mean rank\n` + curve
    .map((pt) => `${String(pt.t).padEnd(2)} ${pt.fraction.toFixed(2).padStart(8)}  ${pt.mean_rank.toFixed(1).padStart(9)}`)
    .join("\n");
}

await init();
$("tr-run").onclick = showTracking;
$("jc-run").onclick = showJacobian;
$("ob-run").onclick = showObservability;
showTracking();
showObservability();
