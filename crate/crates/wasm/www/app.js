import init, { counterexample_table, classify_point, truncation_demo } from "./pkg/fspace_wasm.js";

const $ = (id) => document.getElementById(id);

function num(id) {
  const text = $(id).value.trim();
  return text === "inf" ? Infinity : Number(text);
}

function fail(target, err) {
  target.innerHTML = "";
  const p = document.createElement("p");
  p.className = "error";
  p.textContent = String(err);
  target.appendChild(p);
}

function fmt(x) {
  return Number.isInteger(x) ? String(x) : x.toPrecision(8);
}

function runTable() {
  const out = $("ce-out");
  try {
    const rows = JSON.parse(counterexample_table(num("ce-s"), num("ce-p"), num("ce-q"), num("ce-j")));
    const head = "<tr><th>j</th><th>norm f</th><th>norm |f|</th><th>ratio</th></tr>";
    const body = rows
      .map((r) => `<tr><td>${r.j}</td><td>${fmt(r.norm_f)}</td><td>${fmt(r.norm_abs)}</td><td>${fmt(r.ratio)}</td></tr>`)
      .join("");
    out.innerHTML = `<table>${head}${body}</table>`;
  } catch (e) {
    fail(out, e);
  }
}

function runClassify() {
  const out = $("cl-out");
  try {
    out.className = "";
    out.textContent = JSON.stringify(JSON.parse(classify_point($("cl-space").value)), null, 2);
  } catch (e) {
    out.className = "error";
    out.textContent = String(e);
  }
}

function plot(canvas, x, series) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap((s) => s.y);
  const lo = Math.min(0, ...all);
  const hi = Math.max(0, ...all);
  const span = hi - lo || 1;
  const px = (t) => 10 + ((w - 20) * (t - x[0])) / (x[x.length - 1] - x[0]);
  const py = (v) => h - 10 - ((h - 20) * (v - lo)) / span;
  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  ctx.moveTo(px(x[0]), py(0));
  ctx.lineTo(px(x[x.length - 1]), py(0));
  ctx.stroke();
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.y.forEach((v, i) => (i ? ctx.lineTo(px(x[i]), py(v)) : ctx.moveTo(px(x[i]), py(v))));
    ctx.stroke();
  }
}

function runDemo() {
  const out = $("tr-out");
  try {
    const d = JSON.parse(
      truncation_demo($("tr-space").value, $("tr-kind").value, $("tr-gen").value, num("tr-seed") >>> 0, num("tr-level"))
    );
    const notes = d.flags.map((f) => `<li>${f}</li>`).join("");
    out.innerHTML =
      `<p>${d.kind}: ||f|| = ${fmt(d.norm_f)}, || |f| || = ${fmt(d.norm_abs)}, ratio ${fmt(d.ratio)}</p>` +
      (notes ? `<ul>${notes}</ul>` : "") +
      `<p><span style="color:#1f5fbf">f</span> and <span style="color:#d0611b">|f|</span></p>`;
    plot($("tr-plot"), d.x, [
      { y: d.f, color: "#1f5fbf" },
      { y: d.abs_f, color: "#d0611b" },
    ]);
  } catch (e) {
    fail(out, e);
  }
}

await init();
$("ce-run").addEventListener("click", runTable);
$("cl-run").addEventListener("click", runClassify);
$("tr-run").addEventListener("click", runDemo);
runTable();
runClassify();
runDemo();
