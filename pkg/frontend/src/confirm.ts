// Modal confirmation for destructive actions. The caller gets the entered
// confirmation token, or null if the operator backed out; no request of any
// kind is made until this resolves with a token.

export type ConfirmOptions = {
  title: string;
  message: string;
  tokenLabel?: string; // when set, a token field is shown and required
  confirmLabel?: string;
};

export function confirmDestructive(
  root: Document,
  options: ConfirmOptions,
): Promise<string | null> {
  return new Promise((resolve) => {
    const overlay = root.createElement("div");
    overlay.className = "confirm-overlay";

    const dialog = root.createElement("div");
    dialog.className = "confirm-dialog";

    const title = root.createElement("h2");
    title.textContent = options.title;
    dialog.appendChild(title);

    const message = root.createElement("p");
    message.textContent = options.message;
    dialog.appendChild(message);

    let tokenInput: HTMLInputElement | null = null;
    if (options.tokenLabel) {
      const label = root.createElement("label");
      label.textContent = options.tokenLabel;
      tokenInput = root.createElement("input");
      tokenInput.type = "text";
      tokenInput.className = "confirm-token";
      tokenInput.setAttribute("data-testid", "confirm-token");
      label.appendChild(tokenInput);
      dialog.appendChild(label);
    }

    const row = root.createElement("div");
    row.className = "confirm-buttons";

    const cancel = root.createElement("button");
    cancel.textContent = "Cancel";
    cancel.setAttribute("data-testid", "confirm-cancel");

    const proceed = root.createElement("button");
    proceed.textContent = options.confirmLabel ?? "Confirm";
    proceed.className = "danger";
    proceed.setAttribute("data-testid", "confirm-proceed");
    if (options.tokenLabel) proceed.disabled = true;

    tokenInput?.addEventListener("input", () => {
      proceed.disabled = tokenInput!.value.trim() === "";
    });

    const finish = (value: string | null) => {
      overlay.remove();
      resolve(value);
    };
    cancel.addEventListener("click", () => finish(null));
    proceed.addEventListener("click", () => {
      if (options.tokenLabel) {
        const token = tokenInput!.value.trim();
        if (token === "") return; // token is mandatory, not optional
        finish(token);
      } else {
        finish("");
      }
    });

    row.appendChild(cancel);
    row.appendChild(proceed);
    dialog.appendChild(row);
    overlay.appendChild(dialog);
    root.body.appendChild(overlay);
    tokenInput?.focus();
  });
}
