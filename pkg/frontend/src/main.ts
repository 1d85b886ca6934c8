import { mountFromLocation } from "./app.js";

mountFromLocation(window);
