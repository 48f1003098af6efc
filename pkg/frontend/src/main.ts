/** Cockpit wiring: connection lifecycle, input capture, render loop. */

import { connectCockpit, CockpitSession } from "./client.js";
import { formatHud, formatSummary } from "./hud.js";
import { InputTracker } from "./input.js";
import { SceneMsg } from "./protocol.js";
import { drawFrame, Viewport } from "./scene.js";

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const hudEl = document.getElementById("hud")!;
const statusEl = document.getElementById("status")!;
const overlayEl = document.getElementById("overlay")!;
const connectBtn = document.getElementById("connect") as HTMLButtonElement;
const urlInput = document.getElementById("url") as HTMLInputElement;

const viewport: Viewport = {
  width: canvas.width,
  height: canvas.height,
  metersAcross: 90,
};

const input = new InputTracker();
input.attach(window as unknown as {
  addEventListener(type: string, cb: (ev: KeyboardEvent) => void): void;
});

let session: CockpitSession | null = null;
let scene: SceneMsg | null = null;

function setStatus(text: string, error = false): void {
  statusEl.textContent = text;
  statusEl.className = error ? "error" : "";
}

function showOverlay(html: string): void {
  overlayEl.innerHTML = html;
  overlayEl.style.display = "block";
}

function connect(): void {
  overlayEl.style.display = "none";
  session?.close();
  scene = null;
  setStatus("connecting…");
  session = connectCockpit(urlInput.value, {
    onOpen: () => setStatus("connected — hold ↑ to accelerate, ↓ to brake"),
    onScene: (msg) => {
      scene = msg;
    },
    onState: (msg) => {
      if (scene) drawFrame(ctx, scene, msg, viewport);
      const hud = formatHud(msg);
      hudEl.innerHTML = [
        `<b>t</b> ${hud.time}`,
        `<b>IO</b> ${hud.io}`,
        `<b>ITSI</b> ${hud.itsi}`,
        `<b>S<sub>norm</sub></b> ${hud.sNorm}`,
        `<b>AV proceed</b> <span class="bar"><span style="width:${hud.pLeftBarPercent}%"></span></span> ${hud.pLeftProceed}`,
        `<b>HV proceed</b> <span class="bar"><span style="width:${hud.pStraightBarPercent}%"></span></span> ${hud.pStraightProceed}`,
        `<b>decision</b> ${hud.decision}`,
        `<b>tendency</b> ${hud.category}`,
      ].join("<br>");
    },
    onEnd: (msg) => {
      const rows = formatSummary(msg)
        .map((line) => `<tr><td>${line.label}</td><td>${line.value}</td></tr>`)
        .join("");
      const title = msg.metrics.collision ? "collision" : "episode complete";
      showOverlay(`<h2>${title}</h2><table>${rows}</table>
        <button onclick="location.reload()">new session</button>`);
    },
    onServerError: (msg) => setStatus(`server: ${msg.code} — ${msg.message}`, true),
    onClose: () => {
      if (!session?.ended) {
        showOverlay(`<h2>connection closed</h2>
          <button onclick="location.reload()">reconnect</button>`);
      }
      setStatus("disconnected", true);
    },
    onConnectionError: () => {
      setStatus("connection failed", true);
      showOverlay(`<h2>server unreachable</h2>
        <button onclick="location.reload()">retry</button>`);
    },
    onMalformed: (raw) => console.warn("skipped malformed frame", raw),
  });
  session.setCommandSource(() => input.command());
}

connectBtn.addEventListener("click", connect);
