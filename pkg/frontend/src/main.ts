import "./style.css";
import { ManagerClient } from "./api";
import { Dashboard } from "./dashboard";
import { FileDeletePanel } from "./files";
import { PolicyEditor } from "./policies";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("manager") ?? "http://127.0.0.1:8800";
const token = params.get("token") ?? "operator-token";

const client = new ManagerClient(baseUrl, token);
const app = document.querySelector<HTMLDivElement>("#app")!;

const header = document.createElement("header");
header.innerHTML = `<h1>tiercon console</h1><p class="status">manager: ${baseUrl}</p>`;
app.appendChild(header);

const dashboard = new Dashboard(client, document);
app.appendChild(dashboard.element);
dashboard.start();

const editor = new PolicyEditor(client, params.get("policy") ?? "default", document);
app.appendChild(editor.element);
void editor.load().catch(() => {
  /* surfaced in the editor's status line on demand */
});

const filesFor = params.get("files");
if (filesFor) {
  app.appendChild(new FileDeletePanel(client, filesFor, document).element);
}
