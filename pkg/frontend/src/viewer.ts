/** Rotatable 3D vehicle viewport.
 *
 * Owns a scene graph around one mesh. Rotation spins the model group's
 * quaternion; vertex buffers are never written after upload, so the
 * mesh data a viewer was given stays exactly what the server sent.
 * Rendering is injected (a WebGLRenderer in the browser) so the scene
 * logic also runs headless.
 */

import {
  AmbientLight,
  BufferAttribute,
  BufferGeometry,
  DirectionalLight,
  Group,
  Mesh,
  MeshStandardMaterial,
  PerspectiveCamera,
  Scene,
  Vector3,
} from "three";

import type { MeshData } from "./types.js";

/** Camera start: three-quarter front view (front and one flank visible). */
const DEFAULT_EYE = new Vector3(-0.9, 0.9, 0.75);

const PITCH_LIMIT = Math.PI / 2 - 0.05;

export class MeshViewer {
  readonly scene = new Scene();
  readonly camera: PerspectiveCamera;
  private readonly model = new Group();
  private mesh: Mesh | null = null;
  private yaw = 0;
  private pitch = 0;

  constructor(aspect = 4 / 3) {
    this.camera = new PerspectiveCamera(40, aspect, 0.01, 50);
    this.camera.position.copy(DEFAULT_EYE);
    this.scene.add(this.model);
    this.scene.add(new AmbientLight(0xffffff, 0.6));
    const key = new DirectionalLight(0xffffff, 1.2);
    key.position.set(-2, 3, 4);
    this.scene.add(key);
  }

  /** Replace the displayed mesh. Returns the uploaded geometry. */
  load(data: MeshData): BufferGeometry {
    const positions = new Float32Array(data.vertices.length * 3);
    data.vertices.forEach((v, i) => positions.set(v, i * 3));
    const index = new Uint32Array(data.faces.length * 3);
    data.faces.forEach((f, i) => index.set(f, i * 3));

    const geometry = new BufferGeometry();
    geometry.setAttribute("position", new BufferAttribute(positions, 3));
    geometry.setIndex(new BufferAttribute(index, 1));
    geometry.computeVertexNormals();
    geometry.computeBoundingBox();

    this.disposeMesh();
    this.mesh = new Mesh(
      geometry,
      new MeshStandardMaterial({ color: 0x8899bb, flatShading: false }),
    );
    this.model.add(this.mesh);

    const center = new Vector3();
    geometry.boundingBox!.getCenter(center);
    this.camera.lookAt(center);
    return geometry;
  }

  get vertexCount(): number {
    const geometry = this.mesh?.geometry;
    if (!geometry) return 0;
    return geometry.getAttribute("position").count;
  }

  /** Spin the model in place (drag deltas in radians). */
  rotate(dYaw: number, dPitch: number): void {
    this.yaw += dYaw;
    this.pitch = Math.max(
      -PITCH_LIMIT,
      Math.min(PITCH_LIMIT, this.pitch + dPitch),
    );
    this.model.rotation.set(this.pitch, this.yaw, 0, "YXZ");
  }

  get orientation(): { yaw: number; pitch: number } {
    return { yaw: this.yaw, pitch: this.pitch };
  }

  /** Raw position buffer, for integrity checks. */
  positionArray(): Float32Array | null {
    const geometry = this.mesh?.geometry;
    if (!geometry) return null;
    return geometry.getAttribute("position").array as Float32Array;
  }

  render(renderer: { render(scene: Scene, camera: PerspectiveCamera): void }): void {
    renderer.render(this.scene, this.camera);
  }

  private disposeMesh(): void {
    if (!this.mesh) return;
    this.model.remove(this.mesh);
    this.mesh.geometry.dispose();
    (this.mesh.material as MeshStandardMaterial).dispose();
    this.mesh = null;
  }

  dispose(): void {
    this.disposeMesh();
  }
}
