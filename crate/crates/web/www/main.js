import init, { stimulusSvg, slpIds, slpLabels, modelDistribution, slpSimilarity } from "./pkg/loshot_web.js";

const $ = (id) => document.getElementById(id);
const NS = "http://www.w3.org/2000/svg";
const COLORS = ["#4e79a7", "#f28e2b", "#59a14f"];

function el(name, attrs, text) {
  const node = document.createElementNS(NS, name);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function guard(fn) {
  return () => {
    try {
      $("error").textContent = "";
      fn();
    } catch (e) {
      $("error").textContent = String(e.message ?? e);
    }
  };
}

const drawFigure = guard(() => {
  const i = Number($("position").value);
  $("t").textContent = `t = ${(i / 19).toFixed(3)}`;
  $("figure").innerHTML = stimulusSvg(Number($("manifold").value), i / 19);
});

const drawBars = guard(() => {
  const slp = Number($("slp").value);
  const lab = slpLabels(slp);
  const pct = (a) => Array.from(a, (x) => Math.round(x * 100) + "%").join(" / ");
  $("labels").textContent =
    `Dinosaur 1 (t = 0.25): ${pct(lab.slice(0, 3))}; Dinosaur 2 (t = 0.75): ${pct(lab.slice(3))}`;
  const dist = modelDistribution($("model").value, slp);
  const svg = $("bars");
  svg.replaceChildren();
  const left = 30, top = 10, h = 200, w = 40;
  for (let i = 0; i < 20; i++) {
    let y = top + h;
    for (let k = 0; k < 3; k++) {
      const bh = dist[i * 3 + k] * h;
      y -= bh;
      svg.append(el("rect", { x: left + i * w + 4, y, width: w - 8, height: bh, fill: COLORS[k] }));
    }
    svg.append(el("text", { x: left + i * w + w / 2, y: top + h + 16, "text-anchor": "middle" }, i));
  }
  for (const p of [0, 0.5, 1]) {
    svg.append(el("text", { x: left - 6, y: top + h - p * h + 4, "text-anchor": "end" }, p));
  }
});

const drawHeat = guard(() => {
  const ids = slpIds();
  const n = ids.length;
  const m = slpSimilarity(Number($("exponent").value));
  const svg = $("heat");
  svg.replaceChildren();
  const off = 30, c = 34;
  for (let i = 0; i < n; i++) {
    svg.append(el("text", { x: off - 4, y: off + i * c + c / 2 + 4, "text-anchor": "end" }, ids[i]));
    svg.append(el("text", { x: off + i * c + c / 2, y: off - 6, "text-anchor": "middle" }, ids[i]));
    for (let j = 0; j < n; j++) {
      const v = m[i * n + j];
      const shade = Math.round(255 * (1 - v));
      const cell = el("rect", {
        x: off + j * c, y: off + i * c, width: c - 1, height: c - 1,
        fill: `rgb(${shade},${shade},255)`,
      });
      cell.append(el("title", {}, `SLP ${ids[i]} vs ${ids[j]}: ${v.toFixed(3)}`));
      svg.append(cell);
    }
  }
});

await init();
for (const id of slpIds()) $("slp").append(new Option(`SLP ${id}`, id));
$("manifold").addEventListener("change", drawFigure);
$("position").addEventListener("input", drawFigure);
$("slp").addEventListener("change", drawBars);
$("model").addEventListener("change", drawBars);
$("exponent").addEventListener("input", drawHeat);
drawFigure();
drawBars();
drawHeat();
