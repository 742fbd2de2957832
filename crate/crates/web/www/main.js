import init, { bundled_names, bundled_spec, embed, complete, boundize } from "./pkg/sikorski_web.js";

const $ = (id) => document.getElementById(id);
const canvas = $("plot");
const ctx = canvas.getContext("2d");

function log(text, isError = false) {
  $("log").textContent = text;
  $("log").className = isError ? "err" : "";
}

// Fit all series into the canvas and draw them; each series is
// { points: [[x, y], ...], color, size, line }.
function draw(series, labels) {
  const all = series.flatMap((s) => s.points).filter(([x, y]) => isFinite(x) && isFinite(y));
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (all.length === 0) return;
  let [x0, x1, y0, y1] = [Infinity, -Infinity, Infinity, -Infinity];
  for (const [x, y] of all) {
    x0 = Math.min(x0, x); x1 = Math.max(x1, x);
    y0 = Math.min(y0, y); y1 = Math.max(y1, y);
  }
  if (x1 === x0) { x0 -= 1; x1 += 1; }
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const pad = 30;
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (canvas.width - 2 * pad);
  const sy = (y) => canvas.height - pad - ((y - y0) / (y1 - y0)) * (canvas.height - 2 * pad);
  ctx.strokeStyle = "#ddd";
  ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(`${labels[0]}  [${x0.toPrecision(4)}, ${x1.toPrecision(4)}]`, pad, canvas.height - 8);
  ctx.fillText(`${labels[1]}  [${y0.toPrecision(4)}, ${y1.toPrecision(4)}]`, pad, 16);
  for (const s of series) {
    ctx.fillStyle = s.color;
    ctx.strokeStyle = s.color;
    if (s.line) {
      ctx.beginPath();
      s.points.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
      ctx.stroke();
    } else {
      for (const [x, y] of s.points) {
        ctx.beginPath();
        ctx.arc(sx(x), sy(y), s.size, 0, 2 * Math.PI);
        ctx.fill();
      }
    }
  }
}

// One generator: plot it against the first parameter. Two or more: plot
// the first two generator coordinates.
function plane(points, params) {
  return points.map((p, i) => (p.length >= 2 ? [p[0], p[1]] : [params ? params[i][0] : i, p[0]]));
}

function run(action) {
  try {
    action();
  } catch (e) {
    log(String(e.message ?? e), true);
  }
}

$("embed").onclick = () => run(() => {
  const r = JSON.parse(embed($("spec").value));
  const coords = r.points.map((p) => p.coords);
  const params = r.points.map((p) => p.params);
  const labels = r.generators.length >= 2 ? r.generators : [r.params[0], r.generators[0]];
  draw([{ points: plane(coords, params), color: "#36c", size: 2 }], labels);
  log(`${r.points.length} samples over ${r.generators.join(", ")}; separates points: ${r.separates}`);
});

$("complete").onclick = () => run(() => {
  const r = JSON.parse(complete($("spec").value, Number($("tol").value), Number($("tail").value)));
  const two = r.generators.length >= 2;
  const base = two ? r.points.map((p) => [p[0], p[1]]) : r.points.map((p) => [p[0], 0]);
  const adj = r.adjoined.map((a) => (two ? [a.limit[0], a.limit[1]] : [a.limit[0], 0]));
  draw(
    [
      { points: base, color: "#36c", size: 2 },
      { points: adj, color: "#d22", size: 5 },
    ],
    two ? r.generators : [r.generators[0], ""],
  );
  const lines = r.probes.map((p) => `${p.probe}: ${p.status} ${p.placement}`);
  log(`adjoined ${r.adjoined.length} point(s)\n` + lines.join("\n"));
});

$("boundize").onclick = () => run(() => {
  const r = JSON.parse(boundize($("spec").value, $("fn").value, $("center").value));
  const xs = r.params.map((p) => p[0]);
  const palette = ["#36c", "#2a2", "#c80"];
  const series = r.alphas.map((a, k) => ({
    points: xs.map((x, i) => [x, r.gammas[i][k]]),
    color: palette[k % palette.length],
    line: true,
  }));
  draw(series, ["parameter", "bounded generators"]);
  log(`alphas ${r.alphas.join(", ")}\nmu ${r.mu.join(", ")}\nmax |gamma| ${r.max_abs_gamma.join(", ")}\nlocal residual ${r.local_residual}`);
});

await init();
const select = $("bundled");
for (const name of JSON.parse(bundled_names())) {
  select.add(new Option(name, name));
}
select.onchange = () => { $("spec").value = bundled_spec(select.value); };
select.onchange();
