// File-deletion panel: the operator supplies exact file names, one per line,
// and the server relays the list to the device. Submit is disabled while the
// list is empty, deletion always goes through the confirmation dialog, and
// server errors (unknown names) are rendered verbatim.

import { ApiError, ManagerClient } from "./api";
import { confirmDestructive } from "./confirm";

export class FileDeletePanel {
  readonly element: HTMLElement;
  private textarea: HTMLTextAreaElement;
  private submit: HTMLButtonElement;
  private status: HTMLElement;

  constructor(
    private client: ManagerClient,
    private deviceId: string,
    private doc: Document,
  ) {
    this.element = doc.createElement("section");
    this.element.className = "file-panel";

    const heading = doc.createElement("h2");
    heading.textContent = `delete files on ${deviceId}`;
    this.element.appendChild(heading);

    this.textarea = doc.createElement("textarea");
    this.textarea.rows = 5;
    this.textarea.placeholder = "one file name per line";
    this.textarea.setAttribute("data-testid", "file-names");
    this.textarea.addEventListener("input", () => {
      this.submit.disabled = this.names().length === 0;
    });
    this.element.appendChild(this.textarea);

    this.submit = doc.createElement("button");
    this.submit.textContent = "Delete files";
    this.submit.className = "danger";
    this.submit.disabled = true;
    this.submit.setAttribute("data-testid", "file-delete-submit");
    this.submit.addEventListener("click", () => void this.send());
    this.element.appendChild(this.submit);

    this.status = doc.createElement("p");
    this.status.className = "status";
    this.status.setAttribute("data-testid", "file-delete-status");
    this.element.appendChild(this.status);
  }

  names(): string[] {
    return this.textarea.value
      .split("\n")
      .map((line) => line.trim())
      .filter((line) => line.length > 0);
  }

  async send(): Promise<void> {
    const names = this.names();
    if (names.length === 0) return;
    const confirmed = await confirmDestructive(this.doc, {
      title: `Delete ${names.length} file(s)?`,
      message: `The device will drop: ${names.join(", ")}`,
      confirmLabel: "Delete",
    });
    if (confirmed === null) {
      this.status.textContent = "cancelled";
      return;
    }
    try {
      const result = await this.client.deleteFiles(this.deviceId, names);
      this.status.textContent = result.queued
        ? "queued: device unreachable"
        : `deleted: ${names.join(", ")}`;
    } catch (error) {
      this.status.textContent = error instanceof ApiError ? error.message : String(error);
    }
  }
}
