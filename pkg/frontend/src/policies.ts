// Policy editor: loads the policy document into a JSON editor, PUTs it back
// with the expected revision, and renders the server's validation report
// inline per tier. Saving stays disabled while the last report (or the JSON
// itself) is invalid; a revision conflict asks for a reload instead of
// clobbering someone else's edit.

import { ApiError, ManagerClient, PolicyDocument, Violation } from "./api";

export class PolicyEditor {
  readonly element: HTMLElement;
  private textarea: HTMLTextAreaElement;
  private saveButton: HTMLButtonElement;
  private reloadButton: HTMLButtonElement;
  private report: HTMLElement;
  private statusLine: HTMLElement;
  private revision: number | null = null;
  private dirty = false;

  constructor(
    private client: ManagerClient,
    private policyId: string,
    doc: Document,
  ) {
    this.element = doc.createElement("section");
    this.element.className = "policy-editor";

    const heading = doc.createElement("h2");
    heading.textContent = `policy: ${policyId}`;
    this.element.appendChild(heading);

    this.statusLine = doc.createElement("p");
    this.statusLine.className = "status";
    this.element.appendChild(this.statusLine);

    this.textarea = doc.createElement("textarea");
    this.textarea.rows = 24;
    this.textarea.setAttribute("data-testid", "policy-json");
    this.textarea.addEventListener("input", () => {
      this.dirty = true;
      this.saveButton.disabled = !this.parseable();
    });
    this.element.appendChild(this.textarea);

    this.saveButton = doc.createElement("button");
    this.saveButton.textContent = "Save";
    this.saveButton.setAttribute("data-testid", "policy-save");
    this.saveButton.disabled = true;
    this.saveButton.addEventListener("click", () => void this.save());
    this.element.appendChild(this.saveButton);

    this.reloadButton = doc.createElement("button");
    this.reloadButton.textContent = "Reload";
    this.reloadButton.addEventListener("click", () => void this.load());
    this.element.appendChild(this.reloadButton);

    this.report = doc.createElement("div");
    this.report.className = "validation-report";
    this.report.setAttribute("data-testid", "validation-report");
    this.element.appendChild(this.report);
  }

  parseable(): boolean {
    try {
      JSON.parse(this.textarea.value);
      return true;
    } catch {
      return false;
    }
  }

  async load(): Promise<void> {
    const { policy, revision } = await this.client.getPolicy(this.policyId);
    this.revision = revision;
    this.textarea.value = JSON.stringify(policy, null, 2);
    this.dirty = false;
    this.saveButton.disabled = false;
    this.statusLine.textContent = `revision ${revision}`;
    this.report.textContent = "";
  }

  async save(): Promise<void> {
    let document_: PolicyDocument;
    try {
      document_ = JSON.parse(this.textarea.value) as PolicyDocument;
    } catch {
      this.statusLine.textContent = "not valid JSON";
      this.saveButton.disabled = true;
      return;
    }
    try {
      const result = await this.client.putPolicy(
        this.policyId,
        document_,
        this.revision ?? undefined,
      );
      this.revision = result.revision ?? this.revision;
      this.dirty = false;
      this.renderViolations([]);
      this.statusLine.textContent = `saved, revision ${this.revision}`;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.statusLine.textContent =
          "someone else edited this policy; reload to pick up their changes";
        this.saveButton.disabled = true;
        return;
      }
      if (error instanceof ApiError && error.status === 422 && error.report) {
        this.renderViolations(error.report.violations);
        this.statusLine.textContent = "not saved: validation failed";
        this.saveButton.disabled = true; // stays off until the next edit
        return;
      }
      this.statusLine.textContent = String(error);
    }
  }

  renderViolations(violations: Violation[]): void {
    this.report.textContent = "";
    const byTier = new Map<string, Violation[]>();
    for (const violation of violations) {
      const key = violation.level === null ? "policy" : `level ${violation.level}`;
      byTier.set(key, [...(byTier.get(key) ?? []), violation]);
    }
    for (const [tier, list] of byTier) {
      const block = this.report.ownerDocument.createElement("div");
      block.className = "tier-violations";
      const heading = this.report.ownerDocument.createElement("strong");
      heading.textContent = tier;
      block.appendChild(heading);
      const items = this.report.ownerDocument.createElement("ul");
      for (const violation of list) {
        const item = this.report.ownerDocument.createElement("li");
        item.textContent = `${violation.subject}: ${violation.message}`;
        items.appendChild(item);
      }
      block.appendChild(items);
      this.report.appendChild(block);
    }
  }

  currentRevision(): number | null {
    return this.revision;
  }

  isDirty(): boolean {
    return this.dirty;
  }
}
